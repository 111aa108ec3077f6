#pragma once

#include <memory>
#include <stdexcept>
#include <string>

#include "tgpet/grid.hpp"
#include "tgpet/kl_basis.hpp"
#include "tgpet/likelihood.hpp"
#include "tgpet/radon.hpp"
#include "tgpet/reparam.hpp"

namespace tgpet {

/// Posterior with density exp(-Phi(z) - lambda |z|_TV) relative to the
/// Gaussian reference measure. Operator, basis and data are shared and
/// immutable, so copies are cheap and safe across threads.
template <typename Scalar = double>
class TGPosterior {
 public:
  TGPosterior(std::shared_ptr<const RadonOperator<Scalar>> op, Reparam rep,
              std::shared_ptr<const KLBasis<Scalar>> basis, double lambda,
              std::shared_ptr<const Sinogram> data)
      : op_(std::move(op)), rep_(rep), basis_(std::move(basis)), lambda_(lambda), data_(std::move(data)) {
    if (!op_ || !basis_ || !data_) throw std::invalid_argument("TGPosterior: null component");
    if (!(lambda_ >= 0.0)) throw std::invalid_argument("TGPosterior: lambda must be >= 0");
    rep_.validate();
    require_same_grid(op_->grid(), basis_->grid(), "TGPosterior");
    require_matching_data(op_->n_rays(), *data_, "TGPosterior");
  }

  const RadonOperator<Scalar>& op() const { return *op_; }
  const Reparam& reparam() const { return rep_; }
  const KLBasis<Scalar>& basis() const { return *basis_; }
  const Sinogram& data() const { return *data_; }
  double lambda() const { return lambda_; }
  Index n_modes() const { return basis_->n_modes(); }
  const Grid& grid() const { return basis_->grid(); }

  std::shared_ptr<const RadonOperator<Scalar>> op_ptr() const { return op_; }
  std::shared_ptr<const KLBasis<Scalar>> basis_ptr() const { return basis_; }
  std::shared_ptr<const Sinogram> data_ptr() const { return data_; }

  TGPosterior with_lambda(double lambda) const {
    return TGPosterior(op_, rep_, basis_, lambda, data_);
  }

  template <typename Derived>
  ScalarField<Scalar> field(const Eigen::MatrixBase<Derived>& c) const {
    return synthesize(*basis_, c);
  }
  template <typename Derived>
  ScalarField<Scalar> image(const Eigen::MatrixBase<Derived>& c) const {
    return reparam_apply(rep_, field(c));
  }

 private:
  std::shared_ptr<const RadonOperator<Scalar>> op_;
  Reparam rep_;
  std::shared_ptr<const KLBasis<Scalar>> basis_;
  double lambda_;
  std::shared_ptr<const Sinogram> data_;
};

template <typename Scalar, typename Derived>
Scalar potential_phi(const TGPosterior<Scalar>& p, const Eigen::MatrixBase<Derived>& c) {
  return potential_phi(p.op(), p.reparam(), p.basis(), c, p.data());
}

/// R(z) = lambda * TV(z); the TV acts on the latent field, not on u.
template <typename Scalar, typename Derived>
Scalar potential_r(const TGPosterior<Scalar>& p, const Eigen::MatrixBase<Derived>& c) {
  if (p.lambda() == 0.0) return 0;
  return static_cast<Scalar>(p.lambda()) * tv_seminorm(p.field(c));
}

/// Psi = Phi + R, sharing one synthesis.
template <typename Scalar, typename Derived>
Scalar potential_psi(const TGPosterior<Scalar>& p, const Eigen::MatrixBase<Derived>& c) {
  const ScalarField<Scalar> z = p.field(c);
  Scalar psi = potential_phi_field(p.op(), p.reparam(), z, p.data());
  if (p.lambda() != 0.0) psi += static_cast<Scalar>(p.lambda()) * tv_seminorm(z);
  return psi;
}

/// Gradient of Psi in KL-weight coordinates (<DPsi, e_i>); only defined
/// when the TV term is absent.
template <typename Scalar>
Vector<Scalar> psi_direction(const TGPosterior<Scalar>& p, const CoeffVector<Scalar>& c) {
  if (p.lambda() != 0.0)
    throw std::domain_error("psi_direction: Psi is not differentiable for lambda > 0");
  const ScalarField<Scalar> g = phi_field_gradient(p.op(), p.reparam(), p.field(c), p.data());
  return project(p.basis(), g, p.n_modes());
}

inline void check_delta(double delta, const char* what) {
  if (!(delta >= 0.0 && delta <= 2.0))
    throw std::invalid_argument(std::string(what) + ": delta=" + std::to_string(delta) +
                                " outside [0, 2]");
}

/// rho(z, v) = Psi(z) + 1/2 <v - z, g> + delta/4 <z + v, g> + delta/4 |C0^{1/2} g|^2
/// with z, v standard-normal coefficients (centred) and g a KL-weight
/// direction; <.,.> is the L2 pairing, i.e. sum sqrt(eta_i) x_i g_i.
template <typename Scalar>
Scalar rho_from_psi(const KLBasis<Scalar>& basis, Scalar psi_z, const CoeffVector<Scalar>& z,
                    const CoeffVector<Scalar>& v, const Vector<Scalar>& g, double delta) {
  check_delta(delta, "rho");
  if (z.size() != basis.n_modes() || v.size() != z.size() || g.size() != z.size())
    throw std::invalid_argument("rho: length mismatch");
  const Vector<Scalar> sg = apply_c0_sqrt(basis, g);
  const Scalar d4 = static_cast<Scalar>(delta / 4.0);
  return psi_z + Scalar(0.5) * (v - z).dot(sg) + d4 * (z + v).dot(sg) + d4 * sg.squaredNorm();
}

template <typename Scalar>
Scalar rho(const TGPosterior<Scalar>& p, const CoeffVector<Scalar>& z, const CoeffVector<Scalar>& v,
           const Vector<Scalar>& g, double delta) {
  return rho_from_psi(p.basis(), potential_psi(p, z), z, v, g, delta);
}

}  // namespace tgpet
