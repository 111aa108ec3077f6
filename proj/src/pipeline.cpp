#include "tgpet/pipeline.hpp"

#include "tgpet/io.hpp"
#include "tgpet/phantom.hpp"

namespace tgpet {

Problem build_problem(const RunConfig& cfg) {
  cfg.validate();
  Problem pb;
  pb.grid = cfg.grid();
  pb.reparam = cfg.reparam;
  pb.op = std::make_shared<const RadonOperator<double>>(pb.grid, cfg.scan);
  pb.basis = std::make_shared<const KLBasis<double>>(build_kl_basis(pb.grid, cfg.covariance, cfg.n_modes));
  return pb;
}

ScalarField<double> load_phantom(const RunConfig& cfg) {
  if (cfg.phantom == "builtin") return builtin_phantom(cfg.grid(), cfg.reparam);
  bool field_units = false;
  ScalarField<double> img = io::read_pgm(cfg.phantom, &field_units);
  if (img.grid.nx != cfg.nx || img.grid.ny != cfg.ny)
    throw ConfigError("phantom.source: image is " + std::to_string(img.grid.nx) + "x" +
                      std::to_string(img.grid.ny) + " but the grid is " + std::to_string(cfg.nx) + "x" +
                      std::to_string(cfg.ny));
  return field_units ? img : gray_to_intensity(img, cfg.reparam);
}

Sinogram simulate_sinogram(const RunConfig& cfg, const Problem& pb, const ScalarField<double>& u_true) {
  auto rng = make_stream(cfg.sampler.seed, kSimulateStream);
  return simulate_data(*pb.op, u_true, rng);
}

TGPosterior<double> make_posterior(const Problem& pb, std::shared_ptr<const Sinogram> data, double lambda) {
  return TGPosterior<double>(pb.op, pb.reparam, pb.basis, lambda, std::move(data));
}

SampleRun sample_posterior(const TGPosterior<double>& post, const RunConfig& cfg, const SamplerConfig& sampler) {
  SampleRun run;
  run.map = solve_map(post, cfg.admm);
  SamplerConfig sc = sampler;
  CoeffVector<double> start = run.map.state.z;
  if (cfg.tune) {
    const WarmStart<double> ws = warm_tune(post, start, sc, &run.map.state, 3, std::max<std::int64_t>(sc.burn_in, 1),
                                           cfg.target_acceptance);
    (sc.kind == SamplerKind::pcn ? sc.beta : sc.delta) = ws.tune.stepsize;
    run.pilot_acceptance = ws.tune.acceptance;
    start = ws.state;
  }
  run.stepsize = sc.stepsize();
  run.chain = run_chain(post, start, sc, &run.map.state);
  return run;
}

SampleRun sample_posterior(const TGPosterior<double>& post, const RunConfig& cfg) {
  return sample_posterior(post, cfg, cfg.sampler);
}

PValueEstimate estimate_pb(const TGPosterior<double>& post, const RunConfig& cfg) {
  SamplerConfig sc = cfg.sampler;
  sc.n_samples = cfg.calibration.chain_steps;
  sc.burn_in = cfg.calibration.burn_in;
  sc.thinning = 1;
  sc.seed = make_stream(cfg.sampler.seed, kCalibrationStream)();
  const SampleRun run = sample_posterior(post, cfg, sc);
  if (run.chain.aborted) throw std::runtime_error("calibration chain aborted: " + run.chain.abort_reason);
  return posterior_predictive_p(run.chain, post, cfg.calibration.denominator);
}

TvMeanEstimator::TvMeanEstimator(TGPosterior<double> post, const RunConfig& cfg)
    : post_(std::move(post)), cfg_(cfg), state_(CoeffVector<double>::Zero(post_.n_modes())) {}

double TvMeanEstimator::operator()(double lambda, int iteration) {
  const TGPosterior<double> p = post_.with_lambda(lambda);
  SamplerConfig sc;
  sc.kind = SamplerKind::pcn;
  sc.beta = beta_;
  sc.n_samples = cfg_.calibration.sa_chain_steps;
  sc.burn_in = 0;
  sc.thinning = std::max<std::int64_t>(1, sc.n_samples / 200);
  sc.seed = make_stream(cfg_.sampler.seed, kCalibrationStream + static_cast<std::uint64_t>(iteration))();
  if (cfg_.tune) {
    const WarmStart<double> ws = warm_tune<double>(p, state_, sc, nullptr, 1, sc.n_samples, cfg_.target_acceptance, 500);
    beta_ = sc.beta = ws.tune.stepsize;
    state_ = ws.state;
  }
  const Chain<double> ch = run_chain<double>(p, state_, sc);
  if (ch.aborted || ch.size() == 0) throw std::runtime_error("SA chain aborted: " + ch.abort_reason);
  double tv = 0.0;
  for (Index s = 0; s < ch.size(); ++s) tv += tv_seminorm(p.field(ch.sample(s)));
  state_ = ch.sample(ch.size() - 1);
  return tv / static_cast<double>(ch.size());
}

CalibrationRun calibrate_lambda(const Problem& pb, std::shared_ptr<const Sinogram> data, const RunConfig& cfg) {
  const TGPosterior<double> base = make_posterior(pb, data, 0.0);
  CalibrationRun out;
  out.calibration = admissible_search([&](double lam) { return estimate_pb(base.with_lambda(lam), cfg); },
                                      cfg.calibration.lambda_grid, cfg.calibration.chain_steps,
                                      PValueBand{cfg.calibration.p_low, cfg.calibration.p_high});
  if (!out.calibration.admissible) return out;
  SaConfig sa;
  sa.iterations = cfg.calibration.sa_iterations;
  sa.a0 = cfg.calibration.sa_a0;
  TvMeanEstimator tv(base, cfg);
  out.selection = select_lambda(std::ref(tv), static_cast<double>(pb.basis->n_modes()), *out.calibration.admissible, sa);
  out.calibration.selected = out.selection->lambda;
  return out;
}

ScalarField<double> make_test_image(const RunConfig& cfg, const ScalarField<double>& base) {
  const double lo = cfg.reparam.lower(), hi = cfg.reparam.upper();
  auto rng = make_stream(cfg.artifact.seed, kArtifactStream);
  return inject_artifact(base, cfg.artifact.kind, cfg.artifact.blob, cfg.artifact.magnitude * (hi - lo), rng, lo, hi);
}

}  // namespace tgpet
