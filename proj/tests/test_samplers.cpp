#include "doctest.h"
#include "support.hpp"
#include "tgpet/diagnostics.hpp"
#include "tgpet/samplers.hpp"

using namespace tgpet;
using tgpet::testing::SmallProblem;

TEST_CASE("pcn proposal limits") {
  std::mt19937_64 r1(1), r2(1);
  CoeffVector<double> z(4);
  z << 1, -2, 3, 0.5;
  CHECK(pcn_propose(z, 0.0, r1) == z);
  const auto v = pcn_propose(z, 1.0, r1);
  standard_normal<double>(4, r2);  // skip the draw consumed by the beta = 0 call
  CHECK((v - standard_normal<double>(4, r2)).norm() == 0.0);
  CHECK_THROWS_AS(pcn_propose(z, 1.5, r1), std::invalid_argument);
}

TEST_CASE("pcn proposal preserves the reference measure") {
  std::mt19937_64 rng(2);
  const int n = 100000, d = 3;
  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(d, d);
  Eigen::MatrixXd acc2 = Eigen::MatrixXd::Zero(d, d);
  for (int t = 0; t < n; ++t) {
    const auto z = standard_normal<double>(d, rng);
    const auto v = pcn_propose(z, 0.3, rng);
    const Eigen::MatrixXd outer = v * v.transpose();
    acc += outer;
    acc2 += outer.cwiseProduct(outer);
  }
  const Eigen::MatrixXd mean = acc / n;
  const Eigen::MatrixXd se = ((acc2 / n - mean.cwiseProduct(mean)) / n).cwiseSqrt();
  const Eigen::MatrixXd target = Eigen::MatrixXd::Identity(d, d);
  CHECK(((mean - target).cwiseAbs().array() <= 5.0 * se.array()).all());
}

TEST_CASE("pcn acceptance probability") {
  CHECK(pcn_accept(3.0, 2.0) == 1.0);
  CHECK(pcn_accept(1.0, 1.0 + std::log(2.0)) == doctest::Approx(0.5));
  CHECK(pcn_accept(0.0, 0.0) == 1.0);
}

TEST_CASE("Langevin proposal with zero direction is a pCN proposal") {
  SmallProblem pb(6, 8);
  std::mt19937_64 rng(3);
  const auto z = sample_reference(*pb.basis, rng), w = sample_reference(*pb.basis, rng);
  const double delta = 0.37;
  const double beta = std::sqrt(8 * delta) / (2 + delta);
  const Vector<double> zero = Vector<double>::Zero(8);
  const auto v = langevin_propose(*pb.basis, z, zero, delta, w);
  const CoeffVector<double> expect = std::sqrt(1 - beta * beta) * z + beta * w;
  CHECK((v - expect).norm() < 1e-14);
  CHECK(std::pow((2 - delta) / (2 + delta), 2) + 8 * delta / std::pow(2 + delta, 2) == doctest::Approx(1.0));
}

TEST_CASE("PD-pCN with k_proj = 0 reproduces pCN on matched randomness") {
  SmallProblem pb(8, 15);
  const auto post = pb.posterior(1.0);
  AdmmOptions opt;
  opt.max_outer = 20;
  const auto sol = solve_map(post, opt);
  const double delta = 0.3;
  const double beta = std::sqrt(8 * delta) / (2 + delta);
  MarkovState<double> a, b;
  a.c = b.c = sol.state.z;
  a.psi = b.psi = potential_psi(post, a.c);
  std::mt19937_64 ra(4), rb(4);
  for (int t = 0; t < 200; ++t) {
    const auto oa = pdpcn_step(post, a, sol.state, delta, 0, ra);
    const auto ob = pcn_step(post, b, beta, rb);
    CHECK(oa.log_accept == doctest::Approx(ob.log_accept).epsilon(1e-12));
    CHECK(oa.accepted == ob.accepted);
    CHECK((a.c - b.c).norm() <= 1e-12 * (1 + a.c.norm()));
  }
}

TEST_CASE("pCNL refuses the TV term and needs a positive step") {
  SmallProblem pb(6, 5);
  MarkovState<double> s;
  s.c = CoeffVector<double>::Zero(5);
  s.psi = potential_psi(pb.posterior(1.0), s.c);
  std::mt19937_64 rng(5);
  CHECK_THROWS_AS(pcnl_step(pb.posterior(1.0), s, 0.2, rng), std::invalid_argument);
  CHECK_THROWS_AS(pcnl_step(pb.posterior(0.0), s, 0.0, rng), std::invalid_argument);
}

TEST_CASE("pCNL kernel on a conjugate Gaussian toy") {
  // One mode; Psi(c) = (a c - y)^2 / (2 s^2) so the posterior in c is
  // N(a y / (s^2 P), 1 / P) with P = 1 + a^2 / s^2.
  const auto basis = build_kl_basis(Grid(2, 2), CovarianceSpec{1.0, 0.5}, 1);
  const double a = 1.5, y = 2.0, s = 0.8;
  const double prec = 1 + a * a / (s * s), mean = a * y / (s * s) / prec;
  auto psi = [&](const CoeffVector<double>& c) { return std::pow(a * c(0) - y, 2) / (2 * s * s); };
  // KL-weight direction: dPsi/dc = sqrt(eta) g
  auto dir = [&](const CoeffVector<double>& c) -> Vector<double> {
    return Vector<double>::Constant(1, a * (a * c(0) - y) / (s * s) / basis.sqrt_eigenvalues()(0));
  };
  std::mt19937_64 rng(6);
  const double delta = 0.5;
  CoeffVector<double> c = CoeffVector<double>::Zero(1);
  Vector<double> g = dir(c);
  double psi_c = psi(c);
  const int n = 100000;
  Eigen::ArrayXd trace(n);
  for (int t = 0; t < n; ++t) {
    const auto w = standard_normal<double>(1, rng);
    const auto v = langevin_propose(basis, c, g, delta, w);
    const auto gv = dir(v);
    const double psi_v = psi(v);
    // v = z gives a zero exponent
    CHECK(langevin_log_accept(basis, psi_c, c, g, psi_c, c, g, delta) == 0.0);
    if (metropolis(langevin_log_accept(basis, psi_c, c, g, psi_v, v, gv, delta), rng)) {
      c = v;
      g = gv;
      psi_c = psi_v;
    }
    trace(t) = c(0);
  }
  const double n_eff = ess(trace);
  const double m = trace.mean();
  const double var = (trace - m).square().mean();
  CHECK(std::abs(m - mean) <= 3 * std::sqrt(var / n_eff));
  const Eigen::ArrayXd sq = (trace - mean).square();
  const double sq_se = std::sqrt((sq - sq.mean()).square().mean() / ess(sq));
  CHECK(std::abs(sq.mean() - 1 / prec) <= 3 * sq_se);
}

TEST_CASE("pCN with zero potential keeps unit variances") {
  // Psi == 0 cannot be expressed through a Poisson posterior, so drive the
  // kernel directly; every proposal is accepted.
  std::mt19937_64 rng(7);
  const int n = 100000, d = 3;
  CoeffVector<double> c = CoeffVector<double>::Zero(d);
  Eigen::MatrixXd trace(n, d);
  for (int t = 0; t < n; ++t) {
    const auto v = pcn_propose(c, 0.2, rng);
    if (metropolis(std::log(pcn_accept(0.0, 0.0)), rng)) c = v;
    trace.row(t) = c.transpose();
  }
  for (Index k = 0; k < d; ++k) {
    const Eigen::ArrayXd col = trace.col(k).array();
    const Eigen::ArrayXd sq = col.square();
    const double se = std::sqrt((sq - sq.mean()).square().mean() / ess(sq));
    CHECK(std::abs(sq.mean() - 1.0) <= 5 * se);
  }
}

TEST_CASE("run_chain bookkeeping and determinism") {
  SmallProblem pb(8, 12);
  const auto post = pb.posterior(0.5);
  AdmmOptions opt;
  opt.max_outer = 20;
  const auto sol = solve_map(post, opt);
  for (auto kind : {SamplerKind::pcn, SamplerKind::pcnl, SamplerKind::pdpcn}) {
    SamplerConfig cfg;
    cfg.kind = kind;
    cfg.n_samples = 1003;
    cfg.burn_in = 100;
    cfg.thinning = 4;
    cfg.seed = 9;
    const auto& p = kind == SamplerKind::pcnl ? pb.posterior(0.0) : post;
    const auto ch = run_chain(p, sol.state.z, cfg, &sol.state);
    CHECK(ch.size() == (1003 - 100) / 4);
    CHECK(ch.accept_history.size() == 903u);
    CHECK(ch.psi_trace.size() == 903u);
    CHECK(!ch.aborted);
    const auto again = run_chain(p, sol.state.z, cfg, &sol.state);
    CHECK(again.samples == ch.samples);
    CHECK(again.accept_history == ch.accept_history);
  }
  SamplerConfig bad;
  bad.n_samples = 10;
  bad.burn_in = 10;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad.burn_in = 0;
  bad.thinning = 0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad.thinning = 1;
  bad.beta = 1.2;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  SamplerConfig pd;
  pd.n_samples = 10;
  pd.burn_in = 0;
  CHECK_THROWS_AS(run_chain(post, sol.state.z, pd), std::invalid_argument);
  CHECK(parse_sampler_kind("pdpcn") == SamplerKind::pdpcn);
  CHECK_THROWS_AS(parse_sampler_kind("hmc"), std::invalid_argument);
}

TEST_CASE("PD-pCN stationarity from a converged start") {
  SmallProblem pb(8, 20, 1.0, 13, 0.3, 8);
  const auto post = pb.posterior(1.0);
  const auto sol = solve_map(post, AdmmOptions{});
  SamplerConfig cfg;
  cfg.kind = SamplerKind::pdpcn;
  cfg.delta = 0.3;
  cfg.n_samples = 60000;
  cfg.burn_in = 10000;
  cfg.seed = 21;
  const auto first = run_chain(post, sol.state.z, cfg, &sol.state);
  cfg.seed = 22;
  cfg.burn_in = 0;
  cfg.n_samples = 50000;
  const auto second = run_chain(post, first.sample(first.size() - 1), cfg, &sol.state);
  const auto s1 = pixel_series(first, *pb.basis, pb.rep);
  const auto s2 = pixel_series(second, *pb.basis, pb.rep);
  for (Index p : {0, 9, 18, 27, 36, 45, 54, 63}) {
    const Eigen::ArrayXd a = s1.row(p).transpose().array(), b = s2.row(p).transpose().array();
    const double va = (a - a.mean()).square().mean() / ess(a);
    const double vb = (b - b.mean()).square().mean() / ess(b);
    CHECK(std::abs(a.mean() - b.mean()) <= 3 * std::sqrt(va + vb));
  }
}

TEST_CASE("thinned keeps every stride-th sample ending at the last") {
  Chain<double> ch;
  ch.config.thinning = 2;
  ch.samples.resize(10, 2);
  for (Index i = 0; i < 10; ++i) ch.samples.row(i) << double(i), -double(i);
  ch.accept_history.assign(20, 1);
  const auto t = thinned(ch, 3);
  REQUIRE(t.size() == 3);
  CHECK(t.samples(0, 0) == 3.0);
  CHECK(t.samples(1, 0) == 6.0);
  CHECK(t.samples(2, 0) == 9.0);
  CHECK(t.samples(2, 1) == -9.0);
  CHECK(t.config.thinning == 6);
  CHECK(t.accept_history.size() == 20u);
  CHECK(thinned(ch, 1).size() == 10);
  CHECK(thinned(ch, 20).size() == 0);
  CHECK_THROWS_AS(thinned(ch, 0), std::invalid_argument);
}

TEST_CASE("warm_tune leaves a sticky MAP start") {
  // from the MAP most PD-pCN runs at the pilot-tuned step reject every move
  SmallProblem pb(12, 36, 0.5, 13, 0.05, 8);
  const auto post = pb.posterior(1.0);
  const auto sol = solve_map(post, AdmmOptions{});
  AdmmState<double> st = sol.state;
  st.rho_pen = 0.01;
  SamplerConfig cfg;
  cfg.kind = SamplerKind::pdpcn;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    cfg.seed = seed;
    const auto ws = warm_tune(post, sol.state.z, cfg, &st, 1, 300, 0.25, 500);
    CHECK((ws.state - sol.state.z).norm() > 0.0);
  }
}
