#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "tgpet/diagnostics.hpp"
#include "tgpet/likelihood.hpp"
#include "tgpet/posterior.hpp"
#include "tgpet/samplers.hpp"
#include "tgpet/special.hpp"

namespace tgpet {

/// Denominator of the chi-square discrepancy: theta_i^2 (as written in the
/// method) or theta_i (the Poisson Pearson statistic).
enum class DiscrepancyDenominator { squared, pearson };

template <typename Scalar>
Scalar chi2_discrepancy(const Sinogram& y, const Vector<Scalar>& theta,
                        DiscrepancyDenominator denom = DiscrepancyDenominator::squared) {
  if (theta.size() != y.size()) throw std::invalid_argument("chi2_discrepancy: length mismatch");
  Scalar d = 0;
  for (Index i = 0; i < theta.size(); ++i) {
    const Scalar t = theta(i);
    if (!(t > Scalar(0)))
      throw std::domain_error("chi2_discrepancy: nonpositive theta at ray " + std::to_string(i));
    const Scalar r = static_cast<Scalar>(y.counts(i)) - t;
    d += r * r / (denom == DiscrepancyDenominator::squared ? t * t : t);
  }
  return d;
}

struct DiscrepancyReport {
  double d_value = 0.0;
  double p_classical = 1.0;
  Index dof = 0;
};

/// p_c = 1 - F_{chi2_dof}(D).
inline double classical_p(double d_value, Index dof) {
  if (dof < 1) throw std::invalid_argument("classical_p: dof must be >= 1");
  if (!(d_value >= 0.0)) throw std::invalid_argument("classical_p: discrepancy must be >= 0");
  return chi2_sf(d_value, static_cast<double>(dof));
}

template <typename Scalar>
DiscrepancyReport assess_fit(const Sinogram& y, const Vector<Scalar>& theta,
                             DiscrepancyDenominator denom = DiscrepancyDenominator::squared) {
  DiscrepancyReport r;
  r.dof = y.size();
  r.d_value = static_cast<double>(chi2_discrepancy(y, theta, denom));
  r.p_classical = classical_p(r.d_value, r.dof);
  return r;
}

struct PValueEstimate {
  double value = 0.0;
  /// Monte Carlo standard error (sd / sqrt(ESS) of the per-sample p_c).
  double stderr_mc = 0.0;
  Index n_samples = 0;
};

/// p_b: classical p-value averaged over posterior samples.
template <typename Scalar>
PValueEstimate posterior_predictive_p(const Chain<Scalar>& chain, const TGPosterior<Scalar>& post,
                                      DiscrepancyDenominator denom = DiscrepancyDenominator::squared) {
  if (chain.size() == 0) throw std::invalid_argument("posterior_predictive_p: empty chain");
  Eigen::ArrayXd pc(chain.size());
  for (Index s = 0; s < chain.size(); ++s) {
    const Vector<Scalar> theta = predicted_intensity(post.op(), post.reparam(), post.field(chain.sample(s)));
    pc(s) = assess_fit(post.data(), theta, denom).p_classical;
  }
  PValueEstimate est;
  est.n_samples = chain.size();
  est.value = pc.mean();
  if (chain.size() > 1) {
    const double var = (pc - est.value).square().sum() / static_cast<double>(chain.size() - 1);
    if (var > 0.0) est.stderr_mc = std::sqrt(var / ess(pc));
  }
  return est;
}

/// Band of acceptable p_b values.
struct PValueBand {
  double lower = 0.1;
  double upper = 0.7;
};

struct LambdaCalibration {
  std::vector<double> lambdas;
  std::vector<PValueEstimate> p_b;
  std::vector<std::int64_t> chain_steps;
  std::optional<std::pair<double, double>> admissible;
  double selected = std::numeric_limits<double>::quiet_NaN();
};

/// Admissible interval from p_b evaluated on an ascending grid. p_b is
/// assumed non-increasing in lambda; the interval ends are the linearly
/// interpolated crossings of the band limits. Empty when no grid value
/// falls inside the band.
inline std::optional<std::pair<double, double>> admissible_interval(const std::vector<double>& lambdas,
                                                                    const std::vector<double>& pb,
                                                                    PValueBand band = {}) {
  if (lambdas.size() != pb.size() || lambdas.empty())
    throw std::invalid_argument("admissible_interval: grid and p-values differ in length");
  if (!std::is_sorted(lambdas.begin(), lambdas.end()))
    throw std::invalid_argument("admissible_interval: lambda grid must be ascending");
  const std::size_t n = lambdas.size();
  bool any = false;
  for (double p : pb) any = any || (p >= band.lower && p <= band.upper);
  if (!any) return std::nullopt;

  auto crossing = [&](std::size_t k, double level) {
    const double p0 = pb[k], p1 = pb[k + 1];
    if (p0 == p1) return lambdas[k];
    const double t = std::clamp((p0 - level) / (p0 - p1), 0.0, 1.0);
    return lambdas[k] + t * (lambdas[k + 1] - lambdas[k]);
  };

  double lo = lambdas.front();
  for (std::size_t k = 0; k < n; ++k) {
    if (pb[k] <= band.upper) {
      lo = k == 0 ? lambdas[0] : crossing(k - 1, band.upper);
      break;
    }
  }
  double hi = lambdas.back();
  for (std::size_t k = 0; k < n; ++k) {
    if (pb[k] < band.lower) {
      hi = k == 0 ? lambdas[0] : crossing(k - 1, band.lower);
      break;
    }
  }
  if (hi < lo) return std::nullopt;
  return std::make_pair(lo, hi);
}

/// Evaluates p_b on each grid value through `estimate` and brackets the
/// admissible set.
inline LambdaCalibration admissible_search(const std::function<PValueEstimate(double)>& estimate,
                                           const std::vector<double>& lambda_grid,
                                           std::int64_t chain_budget, PValueBand band = {}) {
  LambdaCalibration cal;
  cal.lambdas = lambda_grid;
  std::vector<double> values;
  for (double lam : lambda_grid) {
    if (!(lam >= 0.0)) throw std::invalid_argument("admissible_search: lambda must be >= 0");
    cal.p_b.push_back(estimate(lam));
    cal.chain_steps.push_back(chain_budget);
    values.push_back(cal.p_b.back().value);
  }
  cal.admissible = admissible_interval(cal.lambdas, values, band);
  return cal;
}

struct SaConfig {
  int iterations = 50;
  /// Initial gain; a_k = a0 / k.
  double a0 = 1.0;
  /// Starting point; NaN means the midpoint of the admissible set.
  double lambda0 = std::numeric_limits<double>::quiet_NaN();
  /// Relative change of the running average below which the trajectory
  /// counts as settled.
  double tol = 1e-2;
};

struct SaRecord {
  int iteration;
  double lambda;
  double gradient;
};

struct SaResult {
  double lambda = 0.0;
  std::vector<SaRecord> trace;
  bool converged = false;
};

/// Projected stochastic approximation on the log marginal likelihood in
/// lambda. With a 1-homogeneous regularizer the log normalizer behaves as
/// -n_eff log(lambda), so the gradient estimate is n_eff / lambda minus the
/// posterior mean of |z|_TV supplied by `mean_tv(lambda, k)`.
inline SaResult select_lambda(const std::function<double(double, int)>& mean_tv, double n_eff,
                              std::pair<double, double> admissible, const SaConfig& cfg) {
  const auto [lo, hi] = admissible;
  if (!(lo <= hi) || lo < 0.0) throw std::invalid_argument("select_lambda: invalid admissible interval");
  if (cfg.iterations < 1) throw std::invalid_argument("select_lambda: need at least one iteration");
  auto proj = [&](double l) { return std::clamp(l, std::max(lo, 1e-12), hi); };
  double lam = proj(std::isnan(cfg.lambda0) ? 0.5 * (lo + hi) : cfg.lambda0);
  SaResult res;
  double avg = 0.0, prev_avg = 0.0;
  int n_avg = 0;
  const int avg_from = cfg.iterations / 2;
  for (int k = 1; k <= cfg.iterations; ++k) {
    const double grad = n_eff / lam - mean_tv(lam, k);
    lam = proj(lam + cfg.a0 / k * grad);
    res.trace.push_back({k, lam, grad});
    if (k > avg_from) {
      prev_avg = avg;
      avg += (lam - avg) / ++n_avg;
    }
  }
  res.converged = n_avg > 1 && std::abs(avg - prev_avg) <= cfg.tol * std::max(std::abs(avg), 1e-12);
  res.lambda = res.converged ? proj(avg) : lam;
  return res;
}

}  // namespace tgpet
