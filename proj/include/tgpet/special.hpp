#pragma once

namespace tgpet {

/// Regularized lower incomplete gamma P(a, x) = gamma(a, x) / Gamma(a).
double regularized_gamma_p(double a, double x);

/// Regularized upper incomplete gamma Q(a, x) = 1 - P(a, x), evaluated
/// without cancellation in the upper tail.
double regularized_gamma_q(double a, double x);

/// CDF of the chi-square distribution with `dof` degrees of freedom.
double chi2_cdf(double x, double dof);

/// Survival function 1 - F(x) of chi-square(dof).
double chi2_sf(double x, double dof);

}  // namespace tgpet
