#pragma once

#include <functional>
#include <memory>

#include "tgpet/admm.hpp"
#include "tgpet/artifact.hpp"
#include "tgpet/calibration.hpp"
#include "tgpet/config.hpp"
#include "tgpet/likelihood.hpp"
#include "tgpet/posterior.hpp"
#include "tgpet/samplers.hpp"

namespace tgpet {

// Stream indices under sampler.seed; each stage draws from its own stream.
inline constexpr std::uint64_t kSimulateStream = 101;
inline constexpr std::uint64_t kArtifactStream = 202;
inline constexpr std::uint64_t kCalibrationStream = 303;

/// Operator and basis for a config; both depend only on geometry fields.
struct Problem {
  Grid grid;
  Reparam reparam;
  std::shared_ptr<const RadonOperator<double>> op;
  std::shared_ptr<const KLBasis<double>> basis;
};

Problem build_problem(const RunConfig& cfg);

/// Built-in phantom, or a PGM file. Files written by this tool carry their
/// value range; other grayscale files are mapped into the reparam band.
ScalarField<double> load_phantom(const RunConfig& cfg);

Sinogram simulate_sinogram(const RunConfig& cfg, const Problem& pb, const ScalarField<double>& u_true);

TGPosterior<double> make_posterior(const Problem& pb, std::shared_ptr<const Sinogram> data, double lambda);

struct SampleRun {
  Chain<double> chain;
  AdmmResult<double> map;
  double stepsize = 0.0;
  double pilot_acceptance = 0.0;
};

/// MAP by ADMM, optional warm-start stepsize tuning, then the chain. The
/// chain starts from the tuned state (or the MAP when tuning is off).
SampleRun sample_posterior(const TGPosterior<double>& post, const RunConfig& cfg, const SamplerConfig& sampler);
SampleRun sample_posterior(const TGPosterior<double>& post, const RunConfig& cfg);

/// p_b from a calibration-budget chain at one lambda.
PValueEstimate estimate_pb(const TGPosterior<double>& post, const RunConfig& cfg);

/// Posterior mean of |z|_TV at lambda by a short tuned pCN chain; the chain
/// state carries over between calls so successive SA iterates warm-start.
class TvMeanEstimator {
 public:
  TvMeanEstimator(TGPosterior<double> post, const RunConfig& cfg);
  double operator()(double lambda, int iteration);

 private:
  TGPosterior<double> post_;
  const RunConfig& cfg_;
  CoeffVector<double> state_;
  double beta_ = 0.1;
};

/// admissible_search over the configured grid, then select_lambda inside
/// the admissible interval when it is nonempty.
struct CalibrationRun {
  LambdaCalibration calibration;
  std::optional<SaResult> selection;
};
CalibrationRun calibrate_lambda(const Problem& pb, std::shared_ptr<const Sinogram> data, const RunConfig& cfg);

/// Test image for artifact detection: the configured edit applied to `base`
/// with magnitude scaled to the reparam range and values kept inside it.
ScalarField<double> make_test_image(const RunConfig& cfg, const ScalarField<double>& base);

}  // namespace tgpet
