#pragma once

#include <memory>
#include <random>

#include "tgpet/kl_basis.hpp"
#include "tgpet/likelihood.hpp"
#include "tgpet/posterior.hpp"
#include "tgpet/radon.hpp"

namespace tgpet::testing {

inline ScalarField<double> random_field(const Grid& g, std::mt19937_64& rng, double sd = 1.0) {
  std::normal_distribution<double> n(0.0, sd);
  ScalarField<double> f(g);
  for (Index p = 0; p < g.size(); ++p) f.flat()(p) = n(rng);
  return f;
}

inline VectorField<double> random_vector_field(const Grid& g, std::mt19937_64& rng) {
  return {g, random_field(g, rng).values, random_field(g, rng).values};
}

inline double rel_err(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-300});
}

/// Small posterior with data simulated from a random latent draw.
struct SmallProblem {
  Grid grid;
  std::shared_ptr<const RadonOperator<double>> op;
  std::shared_ptr<const KLBasis<double>> basis;
  std::shared_ptr<const Sinogram> data;
  Reparam rep;
  CoeffVector<double> c_true;

  SmallProblem(Index n, Index modes, double kappa = 1.0, std::uint64_t seed = 7, double corr_len = 0.2,
               Index n_angles = 8, Index n_det = 0)
      : grid(n, n) {
    op = std::make_shared<RadonOperator<double>>(grid, RadonGeometry{n_angles, n_det ? n_det : n, kappa});
    basis = std::make_shared<KLBasis<double>>(build_kl_basis(grid, CovarianceSpec{2.0, corr_len}, modes));
    std::mt19937_64 rng(seed);
    c_true = sample_reference(*basis, rng);
    data = std::make_shared<Sinogram>(simulate_data(*op, rep, synthesize(*basis, c_true), rng));
  }

  TGPosterior<double> posterior(double lambda) const { return {op, rep, basis, lambda, data}; }
};

}  // namespace tgpet::testing
