#include "tgpet/io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

#include "json.hpp"

namespace tgpet::io {
namespace {

void validate_or_throw(const Sinogram& s, const std::filesystem::path& path) {
  try {
    s.validate();
  } catch (const std::logic_error& e) {
    throw FormatError("'" + path.string() + "': " + e.what());
  }
}

static_assert(std::endian::native == std::endian::little,
              "binary formats are little-endian; big-endian hosts need byte swapping");

std::ofstream open_out(const std::filesystem::path& path, bool binary) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, binary ? std::ios::binary : std::ios::out);
  if (!out) throw FormatError("cannot open '" + path.string() + "' for writing");
  return out;
}

std::ifstream open_in(const std::filesystem::path& path, bool binary) {
  std::ifstream in(path, binary ? std::ios::binary : std::ios::in);
  if (!in) throw FormatError("cannot open '" + path.string() + "'");
  return in;
}

template <typename T>
void put(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& in, const std::filesystem::path& path) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw FormatError("'" + path.string() + "': truncated file");
  return v;
}

void put_doubles(std::ostream& out, const double* p, std::size_t n) {
  out.write(reinterpret_cast<const char*>(p), static_cast<std::streamsize>(n * sizeof(double)));
}

void get_doubles(std::istream& in, double* p, std::size_t n, const std::filesystem::path& path) {
  in.read(reinterpret_cast<char*>(p), static_cast<std::streamsize>(n * sizeof(double)));
  if (!in) throw FormatError("'" + path.string() + "': truncated file");
}

void expect_magic(std::istream& in, const char (&magic)[5], const std::filesystem::path& path) {
  char buf[4];
  in.read(buf, 4);
  if (!in || std::memcmp(buf, magic, 4) != 0)
    throw FormatError("'" + path.string() + "': bad magic, expected " + std::string(magic, 4));
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string tok;
  while (std::getline(ss, tok, sep)) out.push_back(tok);
  return out;
}

double parse_double(const std::string& s, const std::filesystem::path& path) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    return v;
  } catch (const std::exception&) {
    throw FormatError("'" + path.string() + "': not a number: '" + s + "'");
  }
}

}  // namespace

void write_pgm(const std::filesystem::path& path, const ScalarField<double>& f) {
  write_pgm(path, f, f.values.minCoeff(), f.values.maxCoeff());
}

void write_pgm(const std::filesystem::path& path, const ScalarField<double>& f, double lo, double hi) {
  if (!(hi >= lo)) throw std::invalid_argument("write_pgm: hi < lo");
  auto out = open_out(path, true);
  out << "P5\n# tgpet-range " << std::setprecision(17) << lo << ' ' << hi << '\n'
      << f.grid.ny << ' ' << f.grid.nx << "\n65535\n";
  const double span = hi > lo ? hi - lo : 1.0;
  for (Index i = 0; i < f.grid.nx; ++i)
    for (Index j = 0; j < f.grid.ny; ++j) {
      const double t = std::clamp((f(i, j) - lo) / span, 0.0, 1.0);
      const auto v = static_cast<std::uint16_t>(std::lround(t * 65535.0));
      const unsigned char bytes[2] = {static_cast<unsigned char>(v >> 8), static_cast<unsigned char>(v & 0xff)};
      out.write(reinterpret_cast<const char*>(bytes), 2);
    }
  if (!out) throw FormatError("write failed: '" + path.string() + "'");
}

ScalarField<double> read_pgm(const std::filesystem::path& path, bool* in_field_units) {
  auto in = open_in(path, true);
  std::string magic;
  in >> magic;
  if (magic != "P5") throw FormatError("'" + path.string() + "': not a binary PGM (P5)");
  bool has_range = false;
  double lo = 0.0, hi = 1.0;
  std::vector<long> header;
  while (header.size() < 3) {
    in >> std::ws;
    if (in.peek() == '#') {
      std::string comment;
      std::getline(in, comment);
      std::istringstream cs(comment);
      std::string hash, tag;
      cs >> hash >> tag;
      if (tag == "tgpet-range" && (cs >> lo >> hi)) has_range = true;
      continue;
    }
    long v = 0;
    if (!(in >> v)) throw FormatError("'" + path.string() + "': malformed PGM header");
    header.push_back(v);
  }
  in.get();  // single whitespace before raster
  const long width = header[0], height = header[1], maxval = header[2];
  if (width < 2 || height < 2 || maxval < 1 || maxval > 65535)
    throw FormatError("'" + path.string() + "': unsupported PGM dimensions or maxval");
  const Grid g(height, width);
  ScalarField<double> f(g);
  const bool wide = maxval > 255;
  for (Index i = 0; i < g.nx; ++i)
    for (Index j = 0; j < g.ny; ++j) {
      unsigned v = 0;
      if (wide) {
        unsigned char b[2];
        in.read(reinterpret_cast<char*>(b), 2);
        v = (static_cast<unsigned>(b[0]) << 8) | b[1];
      } else {
        unsigned char b;
        in.read(reinterpret_cast<char*>(&b), 1);
        v = b;
      }
      if (!in) throw FormatError("'" + path.string() + "': truncated PGM raster");
      const double t = static_cast<double>(v) / static_cast<double>(maxval);
      f(i, j) = has_range ? lo + t * (hi - lo) : t;
    }
  if (in_field_units) *in_field_units = has_range;
  return f;
}

void write_field_csv(const std::filesystem::path& path, const ScalarField<double>& f) {
  auto out = open_out(path, false);
  out << std::setprecision(17);
  for (Index i = 0; i < f.grid.nx; ++i) {
    for (Index j = 0; j < f.grid.ny; ++j) out << (j ? "," : "") << f(i, j);
    out << '\n';
  }
}

ScalarField<double> read_field_csv(const std::filesystem::path& path) {
  auto in = open_in(path, false);
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    for (const auto& tok : split(line, ',')) row.push_back(parse_double(tok, path));
    if (!rows.empty() && row.size() != rows.front().size())
      throw FormatError("'" + path.string() + "': ragged CSV rows");
    rows.push_back(std::move(row));
  }
  if (rows.size() < 2 || rows.front().size() < 2) throw FormatError("'" + path.string() + "': field too small");
  const Grid g(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
  ScalarField<double> f(g);
  for (Index i = 0; i < g.nx; ++i)
    for (Index j = 0; j < g.ny; ++j) f(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  return f;
}

void write_sinogram_csv(const std::filesystem::path& path, const Sinogram& s) {
  auto out = open_out(path, false);
  out << "angle,detector,count\n";
  for (Index r = 0; r < s.size(); ++r)
    out << s.angle_index[static_cast<std::size_t>(r)] << ',' << s.det_index[static_cast<std::size_t>(r)] << ','
        << s.counts(r) << '\n';
}

Sinogram read_sinogram_csv(const std::filesystem::path& path, Index n_angles, Index n_det) {
  auto in = open_in(path, false);
  std::string line;
  std::getline(in, line);
  if (line.rfind("angle,detector,count", 0) != 0) throw FormatError("'" + path.string() + "': missing CSV header");
  Sinogram s;
  s.n_angles = n_angles;
  s.n_det = n_det;
  std::vector<std::int64_t> counts;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto tok = split(line, ',');
    if (tok.size() != 3) throw FormatError("'" + path.string() + "': expected 3 columns");
    try {
      s.angle_index.push_back(std::stoll(tok[0]));
      s.det_index.push_back(std::stoll(tok[1]));
      counts.push_back(std::stoll(tok[2]));
    } catch (const std::exception&) {
      throw FormatError("'" + path.string() + "': bad integer in '" + line + "'");
    }
  }
  s.counts = Eigen::Map<const CountVector>(counts.data(), static_cast<Index>(counts.size()));
  validate_or_throw(s, path);
  return s;
}

void write_sinogram_bin(const std::filesystem::path& path, const Sinogram& s) {
  auto out = open_out(path, true);
  out.write("SIN1", 4);
  put<std::uint64_t>(out, static_cast<std::uint64_t>(s.n_angles));
  put<std::uint64_t>(out, static_cast<std::uint64_t>(s.n_det));
  put<std::uint64_t>(out, static_cast<std::uint64_t>(s.size()));
  for (Index r = 0; r < s.size(); ++r) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(s.angle_index[static_cast<std::size_t>(r)]));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(s.det_index[static_cast<std::size_t>(r)]));
  }
  for (Index r = 0; r < s.size(); ++r) put<std::int64_t>(out, s.counts(r));
  if (!out) throw FormatError("write failed: '" + path.string() + "'");
}

Sinogram read_sinogram_bin(const std::filesystem::path& path) {
  auto in = open_in(path, true);
  expect_magic(in, "SIN1", path);
  Sinogram s;
  s.n_angles = static_cast<Index>(get<std::uint64_t>(in, path));
  s.n_det = static_cast<Index>(get<std::uint64_t>(in, path));
  const auto d = get<std::uint64_t>(in, path);
  if (d > static_cast<std::uint64_t>(s.n_angles) * static_cast<std::uint64_t>(s.n_det))
    throw FormatError("'" + path.string() + "': ray count exceeds sinogram size");
  for (std::uint64_t r = 0; r < d; ++r) {
    s.angle_index.push_back(get<std::uint32_t>(in, path));
    s.det_index.push_back(get<std::uint32_t>(in, path));
  }
  s.counts.resize(static_cast<Index>(d));
  for (std::uint64_t r = 0; r < d; ++r) s.counts(static_cast<Index>(r)) = get<std::int64_t>(in, path);
  validate_or_throw(s, path);
  return s;
}

void write_basis(const std::filesystem::path& path, const KLBasis<double>& basis) {
  auto out = open_out(path, true);
  const Grid& g = basis.grid();
  out.write("KLB1", 4);
  put<std::uint64_t>(out, static_cast<std::uint64_t>(g.nx));
  put<std::uint64_t>(out, static_cast<std::uint64_t>(g.ny));
  put<double>(out, basis.covariance().gamma);
  put<double>(out, basis.covariance().corr_len);
  put<std::uint64_t>(out, static_cast<std::uint64_t>(basis.n_modes()));
  put_doubles(out, basis.eigenvalues().data(), static_cast<std::size_t>(basis.n_modes()));
  for (Index k = 0; k < basis.n_modes(); ++k) {
    const ScalarField<double> e = basis.eigenfield(k);
    put_doubles(out, e.values.data(), static_cast<std::size_t>(e.values.size()));
  }
  // Separable trailer: mode pairs, 1D factors, mean field, clamp count.
  out.write("SEP1", 4);
  for (const auto& m : basis.modes()) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(m.kx));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(m.ky));
  }
  put_doubles(out, basis.factor_x().data(), static_cast<std::size_t>(basis.factor_x().size()));
  put_doubles(out, basis.factor_y().data(), static_cast<std::size_t>(basis.factor_y().size()));
  put_doubles(out, basis.mean_field().values.data(), static_cast<std::size_t>(g.size()));
  put<std::uint64_t>(out, static_cast<std::uint64_t>(basis.n_clamped()));
  if (!out) throw FormatError("write failed: '" + path.string() + "'");
}

KLBasis<double> read_basis(const std::filesystem::path& path) {
  auto in = open_in(path, true);
  expect_magic(in, "KLB1", path);
  const auto nx = static_cast<Index>(get<std::uint64_t>(in, path));
  const auto ny = static_cast<Index>(get<std::uint64_t>(in, path));
  CovarianceSpec cov;
  cov.gamma = get<double>(in, path);
  cov.corr_len = get<double>(in, path);
  const auto n = static_cast<Index>(get<std::uint64_t>(in, path));
  if (nx < 2 || ny < 2 || n < 1 || n > nx * ny) throw FormatError("'" + path.string() + "': bad basis header");
  const Grid g(nx, ny);
  Eigen::VectorXd eig(n);
  get_doubles(in, eig.data(), static_cast<std::size_t>(n), path);
  in.seekg(static_cast<std::streamoff>(n * g.size() * static_cast<Index>(sizeof(double))), std::ios::cur);
  expect_magic(in, "SEP1", path);
  std::vector<ModeIndex> modes;
  for (Index k = 0; k < n; ++k) {
    const Index kx = get<std::uint32_t>(in, path);
    const Index ky = get<std::uint32_t>(in, path);
    if (kx >= nx || ky >= ny) throw FormatError("'" + path.string() + "': mode index out of range");
    modes.push_back({kx, ky});
  }
  Eigen::MatrixXd ux(nx, nx), uy(ny, ny);
  get_doubles(in, ux.data(), static_cast<std::size_t>(ux.size()), path);
  get_doubles(in, uy.data(), static_cast<std::size_t>(uy.size()), path);
  ScalarField<double> mean(g);
  get_doubles(in, mean.values.data(), static_cast<std::size_t>(g.size()), path);
  const auto clamped = static_cast<Index>(get<std::uint64_t>(in, path));
  return KLBasis<double>(g, cov, std::move(ux), std::move(uy), std::move(modes), std::move(eig), std::move(mean),
                         clamped);
}

void write_chain(const std::filesystem::path& path, const Chain<double>& chain) {
  auto out = open_out(path, true);
  out.write("CHN1", 4);
  put<std::uint32_t>(out, 1);
  put<std::uint64_t>(out, static_cast<std::uint64_t>(chain.n_modes()));
  put<std::uint64_t>(out, static_cast<std::uint64_t>(chain.size()));
  put<std::uint64_t>(out, static_cast<std::uint64_t>(chain.config.thinning));
  put<std::uint64_t>(out, chain.config.seed);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(chain.config.kind));
  put<double>(out, chain.config.stepsize());
  put_doubles(out, chain.samples.data(), static_cast<std::size_t>(chain.samples.size()));
  if (!out) throw FormatError("write failed: '" + path.string() + "'");
}

Chain<double> read_chain(const std::filesystem::path& path, ChainHeader* header) {
  auto in = open_in(path, true);
  expect_magic(in, "CHN1", path);
  ChainHeader h;
  h.version = get<std::uint32_t>(in, path);
  if (h.version != 1) throw FormatError("'" + path.string() + "': unsupported chain version " + std::to_string(h.version));
  h.n_modes = get<std::uint64_t>(in, path);
  h.count = get<std::uint64_t>(in, path);
  h.thinning = get<std::uint64_t>(in, path);
  h.seed = get<std::uint64_t>(in, path);
  const auto kind = get<std::uint32_t>(in, path);
  if (kind > 2) throw FormatError("'" + path.string() + "': unknown sampler kind " + std::to_string(kind));
  h.kind = static_cast<SamplerKind>(kind);
  h.stepsize = get<double>(in, path);
  if (h.n_modes == 0 || h.thinning == 0) throw FormatError("'" + path.string() + "': corrupt chain header");
  const auto expected = static_cast<std::uintmax_t>(4 + 4 + 8 * 4 + 4 + 8) + h.n_modes * h.count * sizeof(double);
  if (std::filesystem::file_size(path) != expected)
    throw FormatError("'" + path.string() + "': size does not match header (corrupt chain)");
  Chain<double> chain;
  chain.config.kind = h.kind;
  chain.config.seed = h.seed;
  chain.config.thinning = static_cast<std::int64_t>(h.thinning);
  if (h.kind == SamplerKind::pcn)
    chain.config.beta = h.stepsize;
  else
    chain.config.delta = h.stepsize;
  chain.samples.resize(static_cast<Index>(h.count), static_cast<Index>(h.n_modes));
  get_doubles(in, chain.samples.data(), static_cast<std::size_t>(chain.samples.size()), path);
  if (header) *header = h;
  return chain;
}

void write_chain_metadata(const std::filesystem::path& path, const Chain<double>& chain) {
  nlohmann::ordered_json j;
  j["sampler"] = to_string(chain.config.kind);
  j["beta"] = chain.config.beta;
  j["delta"] = chain.config.delta;
  j["n_samples"] = chain.config.n_samples;
  j["burn_in"] = chain.config.burn_in;
  j["thinning"] = chain.config.thinning;
  j["seed"] = chain.config.seed;
  j["k_proj"] = chain.config.k_proj;
  j["stored"] = chain.size();
  j["n_modes"] = chain.n_modes();
  j["acceptance_rate"] = chain.acceptance_rate();
  j["burn_in_accepted"] = chain.burn_in_accepted;
  j["aborted"] = chain.aborted;
  if (chain.aborted) j["abort_reason"] = chain.abort_reason;
  auto out = open_out(path, false);
  out << j.dump(2) << '\n';
}

void write_admm_history(const std::filesystem::path& path, const std::vector<AdmmRecord>& history) {
  auto out = open_out(path, false);
  out << std::setprecision(12) << "iteration,primal,dual,objective\n";
  for (const auto& r : history) out << r.iteration << ',' << r.primal << ',' << r.dual << ',' << r.objective << '\n';
}

void write_calibration_csv(const std::filesystem::path& path, const LambdaCalibration& cal) {
  auto out = open_out(path, false);
  out << std::setprecision(12) << "lambda,p_b,mc_stderr,chain_steps\n";
  for (std::size_t k = 0; k < cal.lambdas.size(); ++k)
    out << cal.lambdas[k] << ',' << cal.p_b[k].value << ',' << cal.p_b[k].stderr_mc << ',' << cal.chain_steps[k]
        << '\n';
}

void write_sa_trace_csv(const std::filesystem::path& path, const SaResult& sa) {
  auto out = open_out(path, false);
  out << std::setprecision(12) << "iteration,lambda,gradient\n";
  for (const auto& r : sa.trace) out << r.iteration << ',' << r.lambda << ',' << r.gradient << '\n';
}

}  // namespace tgpet::io
