// tgpet: phantom -> simulate -> calibrate -> sample -> summarize / detect / diag
#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "json.hpp"
#include "tgpet/diagnostics.hpp"
#include "tgpet/io.hpp"
#include "tgpet/manifest.hpp"
#include "tgpet/phantom.hpp"
#include "tgpet/pipeline.hpp"

namespace fs = std::filesystem;
using namespace tgpet;
using json = nlohmann::ordered_json;

namespace {

enum Exit { kOk = 0, kValidation = 2, kRuntime = 3 };

struct Files {
  fs::path dir;
  fs::path operator()(const std::string& name) const { return dir / name; }
};

Manifest manifest_for(const std::string& cmd, const RunConfig& cfg) {
  Manifest m;
  m.command = cmd;
  m.config_hash = sha256_text(cfg.canonical());
  m.seed = cfg.sampler.seed;
  return m;
}

void require_file(const fs::path& p, const std::string& what) {
  if (!fs::exists(p)) throw std::runtime_error("missing " + what + " '" + p.string() + "'; run the producing subcommand first");
}

void write_json(const fs::path& p, const json& j) {
  std::ofstream out(p);
  out << j.dump(2) << "\n";
  if (!out) throw std::runtime_error("cannot write '" + p.string() + "'");
}

json read_json(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw std::runtime_error("cannot open '" + p.string() + "'");
  return json::parse(in);
}

double field_lo(const RunConfig& cfg) { return cfg.reparam.lower(); }
double field_hi(const RunConfig& cfg) { return cfg.reparam.upper(); }

void cmd_phantom(const RunConfig& cfg, const Files& f) {
  const ScalarField<double> u = load_phantom(cfg);
  io::write_pgm(f("phantom.pgm"), u, field_lo(cfg), field_hi(cfg));
  io::write_field_csv(f("phantom.csv"), u);
  Manifest m = manifest_for("phantom", cfg);
  if (cfg.phantom != "builtin") m.inputs.push_back(cfg.phantom);
  m.outputs = {f("phantom.pgm"), f("phantom.csv")};
  m.write(f.dir);
}

void cmd_simulate(const RunConfig& cfg, const Files& f) {
  require_file(f("phantom.csv"), "phantom");
  const Problem pb = build_problem(cfg);
  const ScalarField<double> u = io::read_field_csv(f("phantom.csv"));
  require_same_grid(u.grid, pb.grid, "simulate");
  const Sinogram y = simulate_sinogram(cfg, pb, u);
  io::write_sinogram_csv(f("sinogram.csv"), y);
  io::write_sinogram_bin(f("sinogram.bin"), y);
  Manifest m = manifest_for("simulate", cfg);
  m.inputs = {f("phantom.csv")};
  m.outputs = {f("sinogram.csv"), f("sinogram.bin")};
  m.write(f.dir);
}

std::shared_ptr<const Sinogram> load_data(const Files& f) {
  require_file(f("sinogram.bin"), "sinogram");
  return std::make_shared<const Sinogram>(io::read_sinogram_bin(f("sinogram.bin")));
}

void cmd_calibrate(const RunConfig& cfg, const Files& f) {
  if (cfg.lambda) {
    std::cout << "prior.lambda is fixed at " << *cfg.lambda << "; calibration skipped\n";
    return;
  }
  const Problem pb = build_problem(cfg);
  const auto data = load_data(f);
  const CalibrationRun run = calibrate_lambda(pb, data, cfg);
  io::write_calibration_csv(f("calibration.csv"), run.calibration);
  Manifest m = manifest_for("calibrate", cfg);
  m.inputs = {f("sinogram.bin")};
  m.outputs = {f("calibration.csv")};
  json j;
  j["admissible"] = run.calibration.admissible
                        ? json::array({run.calibration.admissible->first, run.calibration.admissible->second})
                        : json(nullptr);
  if (run.selection) {
    io::write_sa_trace_csv(f("sa_trace.csv"), *run.selection);
    m.outputs.push_back(f("sa_trace.csv"));
    j["lambda"] = run.selection->lambda;
    j["converged"] = run.selection->converged;
  } else {
    j["lambda"] = nullptr;
    std::cerr << "warning: no lambda on the grid gives p_b in [" << cfg.calibration.p_low << ", "
              << cfg.calibration.p_high << "]; admissible set is empty\n";
  }
  write_json(f("lambda.json"), j);
  m.outputs.push_back(f("lambda.json"));
  m.write(f.dir);
}

double resolve_lambda(const RunConfig& cfg, const Files& f, Manifest& m) {
  if (cfg.lambda) return *cfg.lambda;
  require_file(f("lambda.json"), "calibration result");
  const json j = read_json(f("lambda.json"));
  if (j["lambda"].is_null()) throw std::runtime_error("calibration found no admissible lambda; set prior.lambda explicitly");
  m.inputs.push_back(f("lambda.json"));
  return j["lambda"].get<double>();
}

void cmd_sample(const RunConfig& cfg, const Files& f) {
  Manifest m = manifest_for("sample", cfg);
  const double lambda = resolve_lambda(cfg, f, m);
  const Problem pb = build_problem(cfg);
  const auto data = load_data(f);
  m.inputs.push_back(f("sinogram.bin"));
  const TGPosterior<double> post = make_posterior(pb, data, lambda);
  const SampleRun run = sample_posterior(post, cfg);
  if (run.chain.aborted) throw std::runtime_error("chain aborted: " + run.chain.abort_reason);
  io::write_chain(f("chain.chn"), run.chain);
  io::write_chain_metadata(f("chain.json"), run.chain);
  io::write_admm_history(f("admm_history.csv"), run.map.history);
  io::write_basis(f("basis.klb"), *pb.basis);
  write_json(f("sample.json"), json{{"lambda", lambda},
                                    {"stepsize", run.stepsize},
                                    {"pilot_acceptance", run.pilot_acceptance},
                                    {"acceptance", run.chain.acceptance_rate()},
                                    {"admm_converged", run.map.converged},
                                    {"admm_iterations", run.map.history.size()}});
  m.outputs = {f("chain.chn"), f("chain.json"), f("admm_history.csv"), f("basis.klb"), f("sample.json")};
  m.write(f.dir);
}

struct Posterior {
  KLBasis<double> basis;
  Chain<double> chain;
};

Posterior load_chain(const Files& f) {
  require_file(f("chain.chn"), "chain");
  require_file(f("basis.klb"), "basis");
  Posterior p{io::read_basis(f("basis.klb")), io::read_chain(f("chain.chn"))};
  if (p.chain.n_modes() != p.basis.n_modes()) throw io::FormatError("chain and basis disagree on the number of modes");
  if (p.chain.size() == 0) throw std::runtime_error("chain holds no samples");
  return p;
}

void cmd_summarize(const RunConfig& cfg, const Files& f) {
  const Posterior p = load_chain(f);
  const ScalarField<double> mean = posterior_mean(p.chain, p.basis, cfg.reparam);
  const HpdiFields<double> h = pointwise_hpdi(p.chain, p.basis, cfg.reparam, 0.05);
  const ScalarField<double> width = h.width();
  io::write_field_csv(f("posterior_mean.csv"), mean);
  io::write_pgm(f("posterior_mean.pgm"), mean, field_lo(cfg), field_hi(cfg));
  io::write_field_csv(f("hpdi_width.csv"), width);
  io::write_pgm(f("hpdi_width.pgm"), width);
  json j{{"n_samples", p.chain.size()}, {"mean_hpdi_width", width.values.mean()}};
  Manifest m = manifest_for("summarize", cfg);
  m.inputs = {f("chain.chn"), f("basis.klb")};
  if (fs::exists(f("phantom.csv"))) {
    const ScalarField<double> truth = io::read_field_csv(f("phantom.csv"));
    j["psnr_db"] = psnr(mean, truth);
    m.inputs.push_back(f("phantom.csv"));
  }
  write_json(f("summary.json"), j);
  m.outputs = {f("posterior_mean.csv"), f("posterior_mean.pgm"), f("hpdi_width.csv"), f("hpdi_width.pgm"),
               f("summary.json")};
  m.write(f.dir);
}

void cmd_detect(const RunConfig& cfg, const Files& f, const std::string& test_image, Index max_samples) {
  const Posterior p = load_chain(f);
  Manifest m = manifest_for("detect", cfg);
  m.inputs = {f("chain.chn"), f("basis.klb")};
  ScalarField<double> test;
  if (!test_image.empty()) {
    bool field_units = false;
    test = io::read_pgm(test_image, &field_units);
    if (!field_units) test = gray_to_intensity(test, cfg.reparam);
    m.inputs.push_back(test_image);
  } else {
    require_file(f("phantom.csv"), "phantom");
    test = make_test_image(cfg, io::read_field_csv(f("phantom.csv")));
    io::write_pgm(f("test_image.pgm"), test, field_lo(cfg), field_hi(cfg));
    m.inputs.push_back(f("phantom.csv"));
    m.outputs.push_back(f("test_image.pgm"));
  }
  const CredibleLevelMap<double> levels = credible_level_map(p.chain, p.basis, cfg.reparam, test, max_samples);
  io::write_field_csv(f("credible_levels.csv"), levels.levels);
  io::write_pgm(f("credible_levels.pgm"), levels.levels, 0.0, 1.0);
  const Index side = std::max<Index>(2, cfg.nx / 8);
  json j{{"n_samples", levels.n_samples},
         {"mean_level", levels.levels.values.mean()},
         {"max_window_mean", levels.max_window_mean(side)},
         {"window_side", side}};
  if (test_image.empty() && cfg.artifact.kind != ArtifactKind::add_noise) {
    const PixelArray<bool> in = cfg.artifact.blob.mask(levels.levels.grid);
    j["blob_mean_level"] = levels.masked_mean(in);
    j["outside_mean_level"] = levels.masked_mean(!in);
  }
  write_json(f("detect.json"), j);
  m.outputs.insert(m.outputs.end(), {f("credible_levels.csv"), f("credible_levels.pgm"), f("detect.json")});
  m.write(f.dir);
}

void cmd_diag(const RunConfig& cfg, const Files& f, Index max_lag) {
  const Posterior p = load_chain(f);
  const ScalarField<double> ess_map = pixel_ess(p.chain, p.basis, cfg.reparam);
  io::write_field_csv(f("ess.csv"), ess_map);
  // ACF of the pixel with median ESS
  std::vector<double> ess_values(ess_map.values.data(), ess_map.values.data() + ess_map.values.size());
  const double med = median(ess_values);
  Index pix = 0;
  for (Index i = 1; i < ess_map.values.size(); ++i)
    if (std::abs(ess_map.flat()(i) - med) < std::abs(ess_map.flat()(pix) - med)) pix = i;
  const auto series = pixel_series(p.chain, p.basis, cfg.reparam);
  const Index lag = std::min<Index>(max_lag, p.chain.size() - 1);
  const AcfResult acf_px = acf(series.row(pix).transpose().eval(), lag);
  {
    std::ofstream out(f("acf.csv"));
    out << "lag,acf\n";
    for (std::size_t k = 0; k < acf_px.values.size(); ++k) out << k << "," << acf_px.values[k] << "\n";
  }
  write_json(f("diag.json"), json{{"median_ess", med},
                                  {"min_ess", ess_map.values.minCoeff()},
                                  {"max_ess", ess_map.values.maxCoeff()},
                                  {"acf_pixel", pix},
                                  {"n_samples", p.chain.size()}});
  Manifest m = manifest_for("diag", cfg);
  m.inputs = {f("chain.chn"), f("basis.klb")};
  m.outputs = {f("ess.csv"), f("acf.csv"), f("diag.json")};
  m.write(f.dir);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bayesian PET reconstruction with a TV-Gaussian prior and primal-dual pCN sampling"};
  app.require_subcommand(1, 1);
  std::string config_path, preset = "full", output;
  std::optional<std::uint64_t> seed;
  app.add_option("--config", config_path, "INI file with [grid] [scan] [reparam] [prior] [sampler] [admm] "
                                          "[calibration] [artifact] [phantom] [output] sections");
  app.add_option("--preset", preset, "Base settings before the config file")->check(CLI::IsMember({"full", "desk"}));
  app.add_option("--seed", seed, "Overrides sampler.seed");
  app.add_option("--output", output, "Overrides output.dir");
  std::string test_image;
  Index max_lag = 200;
  Index max_samples = 2000;
  app.add_subcommand("phantom", "Write the ground-truth image");
  app.add_subcommand("simulate", "Forward project the phantom and draw Poisson counts");
  app.add_subcommand("calibrate", "p_b over the lambda grid, admissible set and lambda selection");
  app.add_subcommand("sample", "MAP by ADMM, then the MCMC chain");
  app.add_subcommand("summarize", "Posterior mean, 95% HPDI width and PSNR");
  auto* detect = app.add_subcommand("detect", "Per-pixel credible level of a test image");
  detect->add_option("--test-image", test_image, "PGM test image; default is the configured artifact edit of the phantom");
  detect->add_option("--max-samples", max_samples, "Thin the chain to at most this many draws (0 keeps all)")
      ->check(CLI::NonNegativeNumber);
  app.add_subcommand("diag", "Per-pixel ESS and the ACF of the median-ESS pixel")
      ->add_option("--max-lag", max_lag, "Largest ACF lag");
  app.add_subcommand("run", "phantom, simulate, calibrate, sample, summarize, detect and diag in order");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kValidation;
  }

  RunConfig cfg;
  try {
    cfg = preset_config(parse_preset(preset));
    if (!config_path.empty()) cfg = load_config(config_path, cfg);
    if (seed) cfg.sampler.seed = *seed;
    if (!output.empty()) cfg.output = output;
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kValidation;
  }

  const std::string cmd = app.get_subcommands().front()->get_name();
  try {
    fs::create_directories(cfg.output);
    const Files f{cfg.output};
    {
      std::ofstream out(f("config.ini"));
      out << cfg.canonical();
    }
    auto dispatch = [&](const std::string& c) {
      if (c == "phantom") cmd_phantom(cfg, f);
      else if (c == "simulate") cmd_simulate(cfg, f);
      else if (c == "calibrate") cmd_calibrate(cfg, f);
      else if (c == "sample") cmd_sample(cfg, f);
      else if (c == "summarize") cmd_summarize(cfg, f);
      else if (c == "detect") cmd_detect(cfg, f, test_image, max_samples);
      else if (c == "diag") cmd_diag(cfg, f, max_lag);
    };
    if (cmd == "run") {
      for (const char* c : {"phantom", "simulate", "calibrate", "sample", "summarize", "detect", "diag"}) {
        std::cerr << "[tgpet] " << c << "\n";
        dispatch(c);
      }
    } else {
      dispatch(cmd);
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRuntime;
  }
  return kOk;
}
