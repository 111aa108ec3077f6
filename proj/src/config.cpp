#include "tgpet/config.hpp"

#include <CLI11.hpp>

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>

namespace tgpet {

namespace {

std::string fmt(double v) {
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

std::string fmt(std::int64_t v) { return std::to_string(v); }

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n\"'");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n\"'");
  return s.substr(b, e - b + 1);
}

double parse_double(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  double v = 0.0;
  auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || p != t.data() + t.size() || t.empty())
    throw ConfigError(key + ": expected a number, got '" + text + "'");
  return v;
}

std::int64_t parse_int(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  std::int64_t v = 0;
  auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || p != t.data() + t.size() || t.empty())
    throw ConfigError(key + ": expected an integer, got '" + text + "'");
  return v;
}

bool parse_bool(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  if (t == "true" || t == "1" || t == "yes" || t == "on") return true;
  if (t == "false" || t == "0" || t == "no" || t == "off") return false;
  throw ConfigError(key + ": expected true or false, got '" + text + "'");
}

std::vector<double> parse_list(const std::string& key, const std::string& text) {
  std::string t = text;
  for (char& ch : t)
    if (ch == ',' || ch == '[' || ch == ']') ch = ' ';
  std::istringstream in(t);
  std::vector<double> out;
  std::string tok;
  while (in >> tok) out.push_back(parse_double(key, tok));
  if (out.empty()) throw ConfigError(key + ": expected a list of numbers");
  return out;
}

struct Field {
  std::string key;
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

const std::vector<Field>& fields() {
  static const std::vector<Field> table = [] {
    std::vector<Field> f;
    auto r = [&f](std::string key, auto ref) {
      f.push_back({key, [key, ref](RunConfig& c, const std::string& v) { ref(c) = parse_double(key, v); },
                   [ref](const RunConfig& c) { return fmt(ref(const_cast<RunConfig&>(c))); }});
    };
    auto integer = [&f](std::string key, auto ref) {
      f.push_back({key,
                   [key, ref](RunConfig& c, const std::string& v) {
                     ref(c) = static_cast<std::remove_reference_t<decltype(ref(c))>>(parse_int(key, v));
                   },
                   [ref](const RunConfig& c) { return fmt(static_cast<std::int64_t>(ref(const_cast<RunConfig&>(c)))); }});
    };

    integer("grid.nx", [](RunConfig& c) -> Index& { return c.nx; });
    integer("grid.ny", [](RunConfig& c) -> Index& { return c.ny; });
    integer("scan.n_angles", [](RunConfig& c) -> Index& { return c.scan.n_angles; });
    integer("scan.n_det", [](RunConfig& c) -> Index& { return c.scan.n_det; });
    r("scan.kappa", [](RunConfig& c) -> double& { return c.scan.kappa; });
    r("reparam.a", [](RunConfig& c) -> double& { return c.reparam.a; });
    r("reparam.b", [](RunConfig& c) -> double& { return c.reparam.b; });
    r("reparam.c", [](RunConfig& c) -> double& { return c.reparam.c; });
    r("prior.gamma", [](RunConfig& c) -> double& { return c.covariance.gamma; });
    r("prior.corr_len", [](RunConfig& c) -> double& { return c.covariance.corr_len; });
    integer("prior.n_modes", [](RunConfig& c) -> Index& { return c.n_modes; });
    f.push_back({"prior.lambda",
                 [](RunConfig& c, const std::string& v) {
                   if (trim(v) == "auto")
                     c.lambda.reset();
                   else
                     c.lambda = parse_double("prior.lambda", v);
                 },
                 [](const RunConfig& c) { return c.lambda ? fmt(*c.lambda) : std::string("auto"); }});
    f.push_back({"sampler.kind",
                 [](RunConfig& c, const std::string& v) {
                   try {
                     c.sampler.kind = parse_sampler_kind(trim(v));
                   } catch (const std::invalid_argument& e) {
                     throw ConfigError(std::string("sampler.kind: ") + e.what());
                   }
                 },
                 [](const RunConfig& c) { return std::string(to_string(c.sampler.kind)); }});
    r("sampler.beta", [](RunConfig& c) -> double& { return c.sampler.beta; });
    r("sampler.delta", [](RunConfig& c) -> double& { return c.sampler.delta; });
    integer("sampler.n_samples", [](RunConfig& c) -> std::int64_t& { return c.sampler.n_samples; });
    integer("sampler.burn_in", [](RunConfig& c) -> std::int64_t& { return c.sampler.burn_in; });
    integer("sampler.thinning", [](RunConfig& c) -> std::int64_t& { return c.sampler.thinning; });
    integer("sampler.seed", [](RunConfig& c) -> std::uint64_t& { return c.sampler.seed; });
    integer("sampler.k_proj", [](RunConfig& c) -> Index& { return c.sampler.k_proj; });
    f.push_back({"sampler.tune", [](RunConfig& c, const std::string& v) { c.tune = parse_bool("sampler.tune", v); },
                 [](const RunConfig& c) { return std::string(c.tune ? "true" : "false"); }});
    r("sampler.target_acceptance", [](RunConfig& c) -> double& { return c.target_acceptance; });
    r("admm.rho_pen", [](RunConfig& c) -> double& { return c.admm.rho_pen; });
    r("admm.direction_rho", [](RunConfig& c) -> double& { return c.admm.direction_rho; });
    r("admm.tol", [](RunConfig& c) -> double& { return c.admm.tol; });
    integer("admm.max_outer", [](RunConfig& c) -> int& { return c.admm.max_outer; });
    integer("admm.inner_iters", [](RunConfig& c) -> int& { return c.admm.inner_iters; });
    r("admm.inner_tol", [](RunConfig& c) -> double& { return c.admm.inner_tol; });
    f.push_back({"calibration.lambda_grid",
                 [](RunConfig& c, const std::string& v) {
                   c.calibration.lambda_grid = parse_list("calibration.lambda_grid", v);
                 },
                 [](const RunConfig& c) {
                   std::string s;
                   for (double l : c.calibration.lambda_grid) s += (s.empty() ? "" : ",") + fmt(l);
                   return s;
                 }});
    r("calibration.p_low", [](RunConfig& c) -> double& { return c.calibration.p_low; });
    r("calibration.p_high", [](RunConfig& c) -> double& { return c.calibration.p_high; });
    integer("calibration.chain_steps", [](RunConfig& c) -> std::int64_t& { return c.calibration.chain_steps; });
    integer("calibration.burn_in", [](RunConfig& c) -> std::int64_t& { return c.calibration.burn_in; });
    f.push_back({"calibration.denominator",
                 [](RunConfig& c, const std::string& v) {
                   const std::string t = trim(v);
                   if (t == "squared")
                     c.calibration.denominator = DiscrepancyDenominator::squared;
                   else if (t == "pearson")
                     c.calibration.denominator = DiscrepancyDenominator::pearson;
                   else
                     throw ConfigError("calibration.denominator: expected squared or pearson, got '" + v + "'");
                 },
                 [](const RunConfig& c) {
                   return std::string(c.calibration.denominator == DiscrepancyDenominator::squared ? "squared"
                                                                                                   : "pearson");
                 }});
    integer("calibration.sa_iterations", [](RunConfig& c) -> int& { return c.calibration.sa_iterations; });
    r("calibration.sa_a0", [](RunConfig& c) -> double& { return c.calibration.sa_a0; });
    integer("calibration.sa_chain_steps", [](RunConfig& c) -> std::int64_t& { return c.calibration.sa_chain_steps; });
    f.push_back({"artifact.kind",
                 [](RunConfig& c, const std::string& v) {
                   const std::string t = trim(v);
                   if (t == "add_blob")
                     c.artifact.kind = ArtifactKind::add_blob;
                   else if (t == "remove_blob")
                     c.artifact.kind = ArtifactKind::remove_blob;
                   else if (t == "add_noise")
                     c.artifact.kind = ArtifactKind::add_noise;
                   else
                     throw ConfigError("artifact.kind: expected add_blob, remove_blob or add_noise, got '" + v + "'");
                 },
                 [](const RunConfig& c) {
                   switch (c.artifact.kind) {
                     case ArtifactKind::add_blob: return std::string("add_blob");
                     case ArtifactKind::remove_blob: return std::string("remove_blob");
                     case ArtifactKind::add_noise: return std::string("add_noise");
                   }
                   return std::string();
                 }});
    r("artifact.cx", [](RunConfig& c) -> double& { return c.artifact.blob.cx; });
    r("artifact.cy", [](RunConfig& c) -> double& { return c.artifact.blob.cy; });
    r("artifact.radius", [](RunConfig& c) -> double& { return c.artifact.blob.radius; });
    r("artifact.magnitude", [](RunConfig& c) -> double& { return c.artifact.magnitude; });
    integer("artifact.seed", [](RunConfig& c) -> std::uint64_t& { return c.artifact.seed; });
    f.push_back({"phantom.source", [](RunConfig& c, const std::string& v) { c.phantom = trim(v); },
                 [](const RunConfig& c) { return c.phantom; }});
    f.push_back({"output.dir", [](RunConfig& c, const std::string& v) { c.output = trim(v); },
                 [](const RunConfig& c) { return c.output.string(); }});
    return f;
  }();
  return table;
}

void check(bool ok, const std::string& key, const std::string& what) {
  if (!ok) throw ConfigError(key + ": " + what);
}

}  // namespace

void set_config_value(RunConfig& cfg, const std::string& key, const std::string& value) {
  for (const auto& f : fields())
    if (f.key == key) {
      f.set(cfg, value);
      return;
    }
  throw ConfigError(key + ": unknown configuration key");
}

void RunConfig::validate() const {
  check(nx >= 2, "grid.nx", "must be >= 2");
  check(ny >= 2, "grid.ny", "must be >= 2");
  check(scan.n_angles >= 1, "scan.n_angles", "must be >= 1");
  check(scan.n_det >= 1, "scan.n_det", "must be >= 1");
  check(scan.kappa > 0.0 && std::isfinite(scan.kappa), "scan.kappa", "must be > 0");
  check(reparam.a > 0.0, "reparam.a", "must be > 0");
  check(reparam.b > 1.0, "reparam.b", "must be > 1");
  check(reparam.c > 0.0, "reparam.c", "must be > 0");
  check(covariance.gamma > 0.0, "prior.gamma", "must be > 0");
  check(covariance.corr_len > 0.0, "prior.corr_len", "must be > 0");
  check(n_modes >= 1 && n_modes <= nx * ny, "prior.n_modes", "must be in [1, nx*ny]");
  check(!lambda || (*lambda >= 0.0 && std::isfinite(*lambda)), "prior.lambda", "must be >= 0 or auto");
  check(sampler.beta >= 0.0 && sampler.beta <= 1.0, "sampler.beta", "must be in [0, 1]");
  check(sampler.delta >= 0.0 && sampler.delta <= 2.0, "sampler.delta", "must be in [0, 2]");
  check(sampler.kind == SamplerKind::pcn || sampler.delta > 0.0, "sampler.delta",
        "must be > 0 for pcnl and pdpcn");
  check(sampler.burn_in >= 0, "sampler.burn_in", "must be >= 0");
  check(sampler.n_samples > sampler.burn_in, "sampler.n_samples", "must exceed sampler.burn_in");
  check(sampler.thinning >= 1, "sampler.thinning", "must be >= 1");
  check(sampler.k_proj >= -1 && sampler.k_proj <= n_modes, "sampler.k_proj", "must be -1 (all) or in [0, n_modes]");
  check(target_acceptance > 0.0 && target_acceptance < 1.0, "sampler.target_acceptance", "must be in (0, 1)");
  check(admm.rho_pen > 0.0, "admm.rho_pen", "must be > 0");
  check(std::isnan(admm.direction_rho) || admm.direction_rho >= 0.0, "admm.direction_rho", "must be >= 0");
  check(admm.tol > 0.0, "admm.tol", "must be > 0");
  check(admm.max_outer >= 1, "admm.max_outer", "must be >= 1");
  check(admm.inner_iters >= 1, "admm.inner_iters", "must be >= 1");
  check(admm.inner_tol > 0.0, "admm.inner_tol", "must be > 0");
  const auto& cal = calibration;
  check(!cal.lambda_grid.empty(), "calibration.lambda_grid", "must not be empty");
  for (std::size_t i = 0; i < cal.lambda_grid.size(); ++i) {
    check(cal.lambda_grid[i] >= 0.0, "calibration.lambda_grid", "values must be >= 0");
    check(i == 0 || cal.lambda_grid[i] > cal.lambda_grid[i - 1], "calibration.lambda_grid",
          "values must be strictly ascending");
  }
  check(cal.p_low >= 0.0 && cal.p_low < cal.p_high && cal.p_high <= 1.0, "calibration.p_low",
        "need 0 <= p_low < p_high <= 1");
  check(cal.burn_in >= 0, "calibration.burn_in", "must be >= 0");
  check(cal.chain_steps > cal.burn_in, "calibration.chain_steps", "must exceed calibration.burn_in");
  check(cal.sa_iterations >= 1, "calibration.sa_iterations", "must be >= 1");
  check(cal.sa_a0 > 0.0, "calibration.sa_a0", "must be > 0");
  check(cal.sa_chain_steps >= 1, "calibration.sa_chain_steps", "must be >= 1");
  check(artifact.blob.radius > 0.0, "artifact.radius", "must be > 0");
  try {
    artifact.blob.validate();
  } catch (const std::exception& e) {
    throw ConfigError(std::string("artifact.cx: ") + e.what());
  }
  check(artifact.magnitude >= 0.0, "artifact.magnitude", "must be >= 0");
  check(!phantom.empty(), "phantom.source", "must be 'builtin' or a path");
  check(!output.empty(), "output.dir", "must not be empty");
}

std::string RunConfig::canonical() const {
  std::string s;
  for (const auto& f : fields()) s += f.key + " = " + f.get(*this) + "\n";
  return s;
}

Preset parse_preset(const std::string& name) {
  if (name == "full") return Preset::full;
  if (name == "desk") return Preset::desk;
  throw ConfigError("--preset: expected full or desk, got '" + name + "'");
}

RunConfig preset_config(Preset p) {
  RunConfig c;
  c.lambda.reset();
  c.admm.max_outer = 1000;
  c.admm.direction_rho = 0.01;
  if (p == Preset::full) return c;
  c.nx = c.ny = 32;
  c.scan = RadonGeometry{30, 32, 0.5};
  c.reparam.a = 20.0;
  c.n_modes = 500;
  c.sampler.n_samples = 22000;
  c.sampler.burn_in = 2000;
  c.calibration.lambda_grid = {0.0, 1.0, 2.0, 3.0};
  c.output = "run_desk";
  return c;
}

RunConfig load_config(const std::filesystem::path& path, RunConfig base) {
  if (!std::filesystem::exists(path)) throw ConfigError("--config: file '" + path.string() + "' not found");
  std::vector<CLI::ConfigItem> items;
  try {
    items = CLI::ConfigINI().from_file(path.string());
  } catch (const CLI::Error& e) {
    throw ConfigError("--config: cannot parse '" + path.string() + "': " + e.what());
  }
  for (const auto& item : items) {
    if (item.name == "++" || item.name == "--") continue;
    std::string value;
    for (const auto& in : item.inputs) value += (value.empty() ? "" : ",") + in;
    set_config_value(base, item.fullname(), value);
  }
  return base;
}

}  // namespace tgpet
