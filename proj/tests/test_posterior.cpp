#include "doctest.h"
#include "support.hpp"
#include "tgpet/posterior.hpp"
#include "tgpet/samplers.hpp"

using namespace tgpet;
using tgpet::testing::SmallProblem;

TEST_CASE("prior potential") {
  SmallProblem pb(8, 20);
  std::mt19937_64 rng(1);
  const auto c = sample_reference(*pb.basis, rng);
  CHECK(potential_r(pb.posterior(0.0), c) == 0.0);
  CHECK(potential_r(pb.posterior(2.0), c) == doctest::Approx(2.0 * potential_r(pb.posterior(1.0), c)));
  CHECK(potential_r(pb.posterior(1.0), c) > 0.0);

  // constant synthesized field has zero TV
  auto flat = std::make_shared<KLBasis<double>>(*pb.basis);
  flat->set_mean_field(ScalarField<double>::constant(pb.grid, 0.7));
  const TGPosterior<double> p1(pb.op, pb.rep, flat, 3.0, pb.data);
  CHECK(potential_r(p1, CoeffVector<double>::Zero(20)) == 0.0);

  CHECK_THROWS_AS(pb.posterior(-1.0), std::invalid_argument);
}

TEST_CASE("Psi = Phi + R and finiteness") {
  SmallProblem pb(8, 20);
  const auto post = pb.posterior(1.5);
  std::mt19937_64 rng(2);
  for (int t = 0; t < 100; ++t) {
    const auto c = sample_reference(*pb.basis, rng);
    const double psi = potential_psi(post, c);
    CHECK(std::isfinite(psi));
    CHECK(psi - potential_phi(post, c) == doctest::Approx(potential_r(post, c)).epsilon(1e-12));
  }
  const auto c = sample_reference(*pb.basis, rng);
  CHECK(potential_psi(pb.posterior(0.0), c) == potential_phi(post, c));
  CHECK_THROWS_AS(psi_direction(post, c), std::domain_error);
}

TEST_CASE("rho special cases") {
  SmallProblem pb(8, 12);
  const auto& basis = *pb.basis;
  std::mt19937_64 rng(3);
  const auto z = sample_reference(basis, rng), v = sample_reference(basis, rng), g = sample_reference(basis, rng);
  const Vector<double> zero = Vector<double>::Zero(12);
  CHECK(rho_from_psi(basis, 4.2, z, v, zero, 0.7) == 4.2);
  const Vector<double> sg = apply_c0_sqrt(basis, g);
  CHECK(rho_from_psi(basis, 4.2, z, v, g, 0.0) == doctest::Approx(4.2 + 0.5 * (v - z).dot(sg)));
  CHECK_THROWS_AS(rho_from_psi(basis, 0.0, z, v, g, 2.5), std::invalid_argument);
  CHECK_THROWS_AS(rho_from_psi(basis, 0.0, z, v, g, -0.1), std::invalid_argument);
}

TEST_CASE("acceptance exponent equals the Metropolis-Hastings density ratio") {
  // Independent evaluation: target exp(-Psi(c) - |c|^2/2) in standard-normal
  // coordinates, Gaussian proposal with mean ((2-d)c - 2d sqrt(eta) g)/(2+d)
  // and variance 8d/(2+d)^2.
  SmallProblem pb(8, 16);
  const auto& basis = *pb.basis;
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int t = 0; t < 50; ++t) {
    const double delta = 2.0 * unif(rng) + 1e-3;
    const auto z = sample_reference(basis, rng), v = sample_reference(basis, rng);
    const CoeffVector<double> gz = 5.0 * sample_reference(basis, rng), gv = 5.0 * sample_reference(basis, rng);
    const double psi_z = 10.0 * unif(rng), psi_v = 10.0 * unif(rng);

    const double var = 8.0 * delta / ((2.0 + delta) * (2.0 + delta));
    auto log_q = [&](const CoeffVector<double>& from, const Vector<double>& g, const CoeffVector<double>& to) {
      const CoeffVector<double> mean =
          ((2.0 - delta) * from - 2.0 * delta * g.cwiseProduct(basis.sqrt_eigenvalues())) / (2.0 + delta);
      return -0.5 * (to - mean).squaredNorm() / var;
    };
    const double log_ratio = (-psi_v - 0.5 * v.squaredNorm() + log_q(v, gv, z)) -
                             (-psi_z - 0.5 * z.squaredNorm() + log_q(z, gz, v));
    const double exponent = langevin_log_accept(basis, psi_z, z, gz, psi_v, v, gv, delta);
    CHECK(std::exp(exponent) == doctest::Approx(std::exp(log_ratio)).epsilon(1e-10));
    CHECK(exponent == doctest::Approx(-langevin_log_accept(basis, psi_v, v, gv, psi_z, z, gz, delta)).epsilon(1e-12));
  }
}

TEST_CASE("zero potential and zero direction accept everything") {
  SmallProblem pb(8, 10);
  std::mt19937_64 rng(5);
  const Vector<double> zero = Vector<double>::Zero(10);
  for (int t = 0; t < 20; ++t) {
    const auto z = sample_reference(*pb.basis, rng), v = sample_reference(*pb.basis, rng);
    CHECK(langevin_log_accept(*pb.basis, 0.0, z, zero, 0.0, v, zero, 0.3) == doctest::Approx(0.0));
  }
}
