#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "tgpet/admm.hpp"
#include "tgpet/calibration.hpp"
#include "tgpet/grid.hpp"
#include "tgpet/kl_basis.hpp"
#include "tgpet/likelihood.hpp"
#include "tgpet/samplers.hpp"

namespace tgpet::io {

/// Thrown for unreadable or corrupt input files.
struct FormatError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// ScalarField <-> 16-bit binary PGM (P5). Rows of the image are the first
// grid index. The value range is recorded in a "# tgpet-range lo hi"
// comment so tgpet-written files load back in field units; files without
// it load as gray levels in [0, 1].
void write_pgm(const std::filesystem::path& path, const ScalarField<double>& f);
void write_pgm(const std::filesystem::path& path, const ScalarField<double>& f, double lo, double hi);
ScalarField<double> read_pgm(const std::filesystem::path& path, bool* in_field_units = nullptr);

// ScalarField <-> CSV, one grid row per line.
void write_field_csv(const std::filesystem::path& path, const ScalarField<double>& f);
ScalarField<double> read_field_csv(const std::filesystem::path& path);

// Sinogram as CSV (angle,detector,count) and binary ("SIN1").
void write_sinogram_csv(const std::filesystem::path& path, const Sinogram& s);
Sinogram read_sinogram_csv(const std::filesystem::path& path, Index n_angles, Index n_det);
void write_sinogram_bin(const std::filesystem::path& path, const Sinogram& s);
Sinogram read_sinogram_bin(const std::filesystem::path& path);

// KL basis cache ("KLB1"): grid dims, gamma, d, N, eigenvalues, eigenfields,
// then the separable factors used to rebuild the basis.
void write_basis(const std::filesystem::path& path, const KLBasis<double>& basis);
KLBasis<double> read_basis(const std::filesystem::path& path);

// Chain file ("CHN1"): header then row-major coefficient samples.
struct ChainHeader {
  std::uint32_t version = 1;
  std::uint64_t n_modes = 0;
  std::uint64_t count = 0;
  std::uint64_t thinning = 1;
  std::uint64_t seed = 0;
  SamplerKind kind = SamplerKind::pcn;
  double stepsize = 0.0;
};
void write_chain(const std::filesystem::path& path, const Chain<double>& chain);
Chain<double> read_chain(const std::filesystem::path& path, ChainHeader* header = nullptr);
/// JSON sidecar with the sampler configuration and acceptance summary.
void write_chain_metadata(const std::filesystem::path& path, const Chain<double>& chain);

void write_admm_history(const std::filesystem::path& path, const std::vector<AdmmRecord>& history);
void write_calibration_csv(const std::filesystem::path& path, const LambdaCalibration& cal);
void write_sa_trace_csv(const std::filesystem::path& path, const SaResult& sa);

}  // namespace tgpet::io
