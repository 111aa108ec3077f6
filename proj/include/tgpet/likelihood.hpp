#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "tgpet/grid.hpp"
#include "tgpet/kl_basis.hpp"
#include "tgpet/radon.hpp"
#include "tgpet/reparam.hpp"

namespace tgpet {

using CountVector = Eigen::Matrix<std::int64_t, Eigen::Dynamic, 1>;

/// Poisson counts for the retained rays of a RadonOperator, with each
/// ray's (angle, detector) position in the full m x n_det sinogram.
struct Sinogram {
  Index n_angles = 0;
  Index n_det = 0;
  std::vector<Index> angle_index;
  std::vector<Index> det_index;
  CountVector counts;

  Index size() const { return counts.size(); }

  template <typename Scalar = double>
  Vector<Scalar> as_real() const {
    return counts.template cast<Scalar>();
  }

  void validate() const {
    if (static_cast<Index>(angle_index.size()) != counts.size() ||
        static_cast<Index>(det_index.size()) != counts.size())
      throw std::invalid_argument("Sinogram: index arrays and counts differ in length");
    if (counts.size() > 0 && counts.minCoeff() < 0)
      throw std::invalid_argument("Sinogram: negative count");
    for (std::size_t r = 0; r < angle_index.size(); ++r)
      if (angle_index[r] < 0 || angle_index[r] >= n_angles || det_index[r] < 0 || det_index[r] >= n_det)
        throw std::out_of_range("Sinogram: ray index outside the acquisition layout");
  }

  template <typename Scalar>
  static Sinogram layout_of(const RadonOperator<Scalar>& op) {
    Sinogram s;
    s.n_angles = op.geometry().n_angles;
    s.n_det = op.geometry().n_det;
    s.counts = CountVector::Zero(op.n_rays());
    for (Index r = 0; r < op.n_rays(); ++r) {
      s.angle_index.push_back(op.angle_index(r));
      s.det_index.push_back(op.detector_index(r));
    }
    return s;
  }
};

inline void require_matching_data(Index n_rays, const Sinogram& y, const char* what) {
  if (y.size() != n_rays)
    throw std::invalid_argument(std::string(what) + ": sinogram has " + std::to_string(y.size()) +
                                " counts but the operator has " + std::to_string(n_rays) + " rays");
}

/// Independent y_i ~ Poisson(theta_i).
template <typename Scalar, typename Rng>
Sinogram simulate_counts(const RadonOperator<Scalar>& op, const Vector<Scalar>& theta, Rng& rng) {
  if (theta.size() != op.n_rays()) throw std::invalid_argument("simulate_data: theta length mismatch");
  Sinogram s = Sinogram::layout_of(op);
  for (Index i = 0; i < theta.size(); ++i) {
    const double t = static_cast<double>(theta(i));
    if (!(t >= 0.0) || !std::isfinite(t))
      throw std::invalid_argument("simulate_data: projected intensity " + std::to_string(t) +
                                  " at ray " + std::to_string(i) + " is negative or not finite");
    if (t == 0.0) continue;
    std::poisson_distribution<std::int64_t> pois(t);
    s.counts(i) = pois(rng);
  }
  return s;
}

/// Simulates counts from an image u (must be nonnegative).
template <typename Scalar, typename Rng>
Sinogram simulate_data(const RadonOperator<Scalar>& op, const ScalarField<Scalar>& u_true, Rng& rng) {
  return simulate_counts(op, op.apply(u_true), rng);
}

/// Simulates counts from a latent field z through the reparametrization.
template <typename Scalar, typename Rng>
Sinogram simulate_data(const RadonOperator<Scalar>& op, const Reparam& rep,
                       const ScalarField<Scalar>& z_true, Rng& rng) {
  return simulate_counts(op, op.apply(reparam_apply(rep, z_true)), rng);
}

/// theta = A f(z)
template <typename Scalar>
Vector<Scalar> predicted_intensity(const RadonOperator<Scalar>& op, const Reparam& rep,
                                   const ScalarField<Scalar>& z) {
  return op.apply(reparam_apply(rep, z));
}

/// Phi = <theta, 1> - <y, ln theta>.
template <typename Derived>
typename Derived::Scalar poisson_potential(const Eigen::MatrixBase<Derived>& theta, const Sinogram& y) {
  using Scalar = typename Derived::Scalar;
  if (theta.size() != y.size()) throw std::invalid_argument("potential_phi: data length mismatch");
  Scalar phi = 0;
  for (Index i = 0; i < theta.size(); ++i) {
    if (!(theta(i) > Scalar(0)))
      throw std::domain_error("potential_phi: nonpositive intensity at ray " + std::to_string(i));
    phi += theta(i);
    if (y.counts(i) != 0) phi -= static_cast<Scalar>(y.counts(i)) * std::log(theta(i));
  }
  return phi;
}

template <typename Scalar>
Scalar potential_phi_field(const RadonOperator<Scalar>& op, const Reparam& rep,
                           const ScalarField<Scalar>& z, const Sinogram& y) {
  require_matching_data(op.n_rays(), y, "potential_phi");
  return poisson_potential(predicted_intensity(op, rep, z), y);
}

template <typename Scalar, typename Derived>
Scalar potential_phi(const RadonOperator<Scalar>& op, const Reparam& rep, const KLBasis<Scalar>& basis,
                     const Eigen::MatrixBase<Derived>& c, const Sinogram& y) {
  return potential_phi_field(op, rep, synthesize(basis, c), y);
}

/// L2 (Riesz) gradient of Phi with respect to the field z:
/// G = f'(z) * A^T (1 - y / theta) / cell_area.
template <typename Scalar>
ScalarField<Scalar> phi_field_gradient(const RadonOperator<Scalar>& op, const Reparam& rep,
                                       const ScalarField<Scalar>& z, const Sinogram& y) {
  require_matching_data(op.n_rays(), y, "potential_phi_grad");
  const Vector<Scalar> theta = predicted_intensity(op, rep, z);
  Vector<Scalar> resid(theta.size());
  for (Index i = 0; i < theta.size(); ++i) {
    if (!(theta(i) > Scalar(0)))
      throw std::domain_error("potential_phi_grad: nonpositive intensity at ray " + std::to_string(i));
    resid(i) = Scalar(1) - static_cast<Scalar>(y.counts(i)) / theta(i);
  }
  ScalarField<Scalar> g = op.adjoint(resid);
  g.values *= reparam_deriv(rep, z).values / static_cast<Scalar>(z.grid.cell_area());
  return g;
}

/// dPhi/dc_i = sqrt(eta_i) <G, e_i> for the standard-normal coefficients.
template <typename Scalar, typename Derived>
CoeffVector<Scalar> potential_phi_grad(const RadonOperator<Scalar>& op, const Reparam& rep,
                                       const KLBasis<Scalar>& basis, const Eigen::MatrixBase<Derived>& c,
                                       const Sinogram& y) {
  const ScalarField<Scalar> g = phi_field_gradient(op, rep, synthesize(basis, c), y);
  return apply_c0_sqrt(basis, project(basis, g, basis.n_modes()));
}

/// Constants of the a-priori bounds on Phi implied by the reparametrization:
/// theta_lo <= theta <= theta_hi componentwise and ||ln theta||_2 <= l_max.
template <typename Scalar = double>
struct PhiBounds {
  Vector<Scalar> theta_lo;
  Vector<Scalar> theta_hi;
  Scalar l_max = 0;
  Scalar op_norm = 0;

  static PhiBounds compute(const RadonOperator<Scalar>& op, const Reparam& rep) {
    PhiBounds b;
    const Vector<Scalar> w = op.ray_lengths() * static_cast<Scalar>(op.kappa());
    b.theta_lo = w * static_cast<Scalar>(rep.lower());
    b.theta_hi = w * static_cast<Scalar>(rep.upper());
    Scalar acc = 0;
    for (Index i = 0; i < w.size(); ++i) {
      const Scalar lo = std::log(b.theta_lo(i)), hi = std::log(b.theta_hi(i));
      acc += std::max(lo * lo, hi * hi);
    }
    b.l_max = std::sqrt(acc);
    b.op_norm = op.operator_norm();
    return b;
  }

  Scalar lower(Scalar r) const { return theta_lo.sum() - l_max * r; }
  Scalar upper(Scalar r) const { return theta_hi.sum() + l_max * r; }

  /// Lipschitz constant of Phi in z (L2 norm of the field difference)
  /// for data of norm y_norm: (sqrt(d) + |y| / min theta_lo) * |A| * sup f'.
  Scalar lipschitz_z(Scalar y_norm, const Reparam& rep) const {
    const Scalar d = static_cast<Scalar>(theta_lo.size());
    return (std::sqrt(d) + y_norm / theta_lo.minCoeff()) * op_norm *
           static_cast<Scalar>(rep.lipschitz());
  }

  Scalar lipschitz_y() const { return l_max; }
};

}  // namespace tgpet
