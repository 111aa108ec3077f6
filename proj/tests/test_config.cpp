#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "doctest.h"
#include "tgpet/config.hpp"

using namespace tgpet;
namespace fs = std::filesystem;

namespace {

fs::path write_ini(const std::string& text) {
  const fs::path p = fs::temp_directory_path() / ("tgpet_cfg_" + std::to_string(std::random_device{}()) + ".ini");
  std::ofstream(p) << text;
  return p;
}

std::string error_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

RunConfig load_text(const std::string& text, RunConfig base = {}) {
  const fs::path p = write_ini(text);
  struct Cleanup {
    fs::path p;
    ~Cleanup() { fs::remove(p); }
  } c{p};
  return load_config(p, base);
}

}  // namespace

TEST_CASE("defaults and presets validate") {
  CHECK_NOTHROW(RunConfig{}.validate());
  const RunConfig full = preset_config(Preset::full);
  CHECK_NOTHROW(full.validate());
  CHECK(full.nx == 128);
  CHECK(full.ny == 128);
  CHECK(full.scan.n_angles == 60);
  CHECK(full.scan.n_det == 128);
  CHECK(full.n_modes == 6000);
  CHECK(full.sampler.n_samples == 500000);
  CHECK(full.sampler.burn_in == 50000);
  CHECK_FALSE(full.lambda.has_value());
  const RunConfig desk = preset_config(Preset::desk);
  CHECK_NOTHROW(desk.validate());
  CHECK(desk.nx == 32);
  CHECK(desk.n_modes == 500);
  CHECK(parse_preset("desk") == Preset::desk);
  CHECK_THROWS_AS(parse_preset("huge"), ConfigError);
}

TEST_CASE("INI overrides apply on top of the base") {
  const RunConfig c = load_text("[grid]\nnx = 40\nny = 24\n[prior]\nlambda = 1.5\n[calibration]\nlambda_grid = 0, 0.5, 2\n",
                                preset_config(Preset::desk));
  CHECK(c.nx == 40);
  CHECK(c.ny == 24);
  REQUIRE(c.lambda.has_value());
  CHECK(*c.lambda == doctest::Approx(1.5));
  CHECK(c.calibration.lambda_grid == std::vector<double>{0.0, 0.5, 2.0});
  CHECK(c.n_modes == 500);
  const RunConfig a = load_text("[prior]\nlambda = auto\n", c);
  CHECK_FALSE(a.lambda.has_value());
}

TEST_CASE("unknown keys and sections are rejected by name") {
  CHECK(error_of([] { load_text("[grid]\nnz = 4\n"); }).find("grid.nz") != std::string::npos);
  CHECK(error_of([] { load_text("[gridd]\nnx = 4\n"); }).find("gridd.nx") != std::string::npos);
  RunConfig c;
  CHECK_THROWS_AS(set_config_value(c, "sampler.speed", "1"), ConfigError);
}

TEST_CASE("unparsable values name the key") {
  CHECK(error_of([] { load_text("[sampler]\nn_samples = lots\n"); }).find("sampler.n_samples") != std::string::npos);
  CHECK(error_of([] { load_text("[sampler]\nkind = gibbs\n"); }).find("sampler.kind") != std::string::npos);
  CHECK_THROWS_AS(load_config("/nonexistent/tgpet.ini", RunConfig{}), ConfigError);
}

TEST_CASE("validation messages name the offending field") {
  const auto msg = [](const std::string& key, const std::string& value) {
    RunConfig c = preset_config(Preset::desk);
    set_config_value(c, key, value);
    return error_of([&] { c.validate(); });
  };
  CHECK(msg("grid.nx", "1").rfind("grid.nx:", 0) == 0);
  CHECK(msg("scan.kappa", "0").rfind("scan.kappa:", 0) == 0);
  CHECK(msg("reparam.b", "0.5").rfind("reparam.b:", 0) == 0);
  CHECK(msg("prior.n_modes", "5000").rfind("prior.n_modes:", 0) == 0);
  CHECK(msg("prior.lambda", "-1").rfind("prior.lambda:", 0) == 0);
  CHECK(msg("sampler.beta", "1.5").rfind("sampler.beta:", 0) == 0);
  CHECK(msg("sampler.burn_in", "30000").rfind("sampler.n_samples:", 0) == 0);
  CHECK(msg("sampler.target_acceptance", "1").rfind("sampler.target_acceptance:", 0) == 0);
  CHECK(msg("admm.tol", "0").rfind("admm.tol:", 0) == 0);
  CHECK(msg("calibration.lambda_grid", "2, 1").rfind("calibration.lambda_grid:", 0) == 0);
  CHECK(msg("calibration.p_high", "0.05").rfind("calibration.p_low:", 0) == 0);
  CHECK(msg("artifact.radius", "0").rfind("artifact.radius:", 0) == 0);
}

TEST_CASE("canonical text round-trips through set_config_value") {
  RunConfig c = preset_config(Preset::desk);
  set_config_value(c, "prior.lambda", "2.25");
  set_config_value(c, "sampler.kind", "pcn");
  set_config_value(c, "artifact.kind", "add_noise");
  set_config_value(c, "admm.direction_rho", "0.03");
  const std::string text = c.canonical();
  RunConfig d;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    const auto eq = line.find(" = ");
    REQUIRE(eq != std::string::npos);
    set_config_value(d, line.substr(0, eq), line.substr(eq + 3));
  }
  CHECK(d.canonical() == text);
  CHECK(preset_config(Preset::desk).canonical() != text);
}
