#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "tgpet/admm.hpp"
#include "tgpet/artifact.hpp"
#include "tgpet/calibration.hpp"
#include "tgpet/kl_basis.hpp"
#include "tgpet/radon.hpp"
#include "tgpet/reparam.hpp"
#include "tgpet/samplers.hpp"

namespace tgpet {

/// Raised for any out-of-range or unknown configuration entry. The message
/// names the offending key as "section.key".
struct ConfigError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct CalibrationSettings {
  std::vector<double> lambda_grid{0.0, 1.0, 2.0, 3.0, 4.0, 5.0};
  double p_low = 0.1;
  double p_high = 0.7;
  std::int64_t chain_steps = 20000;
  std::int64_t burn_in = 2000;
  DiscrepancyDenominator denominator = DiscrepancyDenominator::squared;
  int sa_iterations = 30;
  double sa_a0 = 1.0;
  std::int64_t sa_chain_steps = 2000;
};

struct ArtifactSettings {
  ArtifactKind kind = ArtifactKind::add_blob;
  BlobGeometry blob{0.62, 0.62, 0.1};
  /// Fraction of the reparametrization range [lo, hi].
  double magnitude = 0.35;
  std::uint64_t seed = 5;
};

struct RunConfig {
  Index nx = 128;
  Index ny = 128;
  RadonGeometry scan{60, 128, 0.5};
  Reparam reparam;
  CovarianceSpec covariance{2.0, 1e-3};
  Index n_modes = 6000;
  /// Unset means "auto": calibrate, then select within the admissible set.
  std::optional<double> lambda = 2.0;
  SamplerConfig sampler{SamplerKind::pdpcn, 0.1, 0.2, 500000, 50000, 1, 1, -1};
  bool tune = true;
  double target_acceptance = 0.25;
  AdmmOptions admm;
  CalibrationSettings calibration;
  ArtifactSettings artifact;
  /// "builtin" or a PGM path.
  std::string phantom = "builtin";
  std::filesystem::path output = "run";

  Grid grid() const { return Grid(nx, ny); }

  /// Throws ConfigError naming the first offending field.
  void validate() const;

  /// Canonical "section.key = value" text; identical configs give identical
  /// text, which is what the manifest hashes.
  std::string canonical() const;
};

enum class Preset { full, desk };

Preset parse_preset(const std::string& name);
RunConfig preset_config(Preset p);

/// Applies an INI file on top of `base`. Unknown sections or keys and
/// unparsable values raise ConfigError.
RunConfig load_config(const std::filesystem::path& path, RunConfig base);

/// Applies one "section.key" = value assignment.
void set_config_value(RunConfig& cfg, const std::string& key, const std::string& value);

}  // namespace tgpet
