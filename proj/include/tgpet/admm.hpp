#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "tgpet/grid.hpp"
#include "tgpet/kl_basis.hpp"
#include "tgpet/likelihood.hpp"
#include "tgpet/posterior.hpp"

namespace tgpet {

struct AdmmOptions {
  double rho_pen = 1.0;
  int max_outer = 200;
  double tol = 1e-4;
  int inner_iters = 50;
  double inner_tol = 1e-6;
  /// Use eta <- eta + rho (phi - grad z) instead of the standard
  /// eta <- eta + rho (grad z - phi).
  bool literal_dual_sign = false;
  /// Penalty of the augmented Lagrangian handed to offset_direction with the
  /// returned state. The saddle point itself does not depend on it, so the
  /// solve can run at a better-conditioned rho_pen. NaN means rho_pen.
  double direction_rho = std::numeric_limits<double>::quiet_NaN();

  void validate() const {
    if (!(rho_pen > 0.0)) throw std::invalid_argument("AdmmOptions: rho_pen must be > 0");
    if (max_outer < 1) throw std::invalid_argument("AdmmOptions: max_outer must be >= 1");
    if (!(tol > 0.0)) throw std::invalid_argument("AdmmOptions: tol must be > 0");
    if (inner_iters < 1) throw std::invalid_argument("AdmmOptions: inner_iters must be >= 1");
    if (!(inner_tol > 0.0)) throw std::invalid_argument("AdmmOptions: inner_tol must be > 0");
    if (!std::isnan(direction_rho) && !(direction_rho >= 0.0))
      throw std::invalid_argument("AdmmOptions: direction_rho must be >= 0");
  }
};

template <typename Scalar = double>
struct AdmmState {
  CoeffVector<Scalar> z;
  VectorField<Scalar> phi;
  VectorField<Scalar> eta;
  double rho_pen = 1.0;
  int iteration = 0;
  Scalar primal_residual = 0;
  Scalar dual_residual = 0;
};

struct AdmmRecord {
  int iteration;
  double primal;
  double dual;
  double objective;
};

template <typename Scalar = double>
struct AdmmResult {
  AdmmState<Scalar> state;
  std::vector<AdmmRecord> history;
  bool converged = false;
};

/// Pointwise isotropic shrinkage of q = grad z + eta / rho by lambda / rho.
template <typename Scalar>
VectorField<Scalar> phi_step(const ScalarField<Scalar>& z, const VectorField<Scalar>& eta,
                             double rho_pen, double lambda) {
  if (!(rho_pen > 0.0)) throw std::invalid_argument("phi_step: rho_pen must be > 0");
  VectorField<Scalar> q = gradient(z);
  const Scalar inv_rho = static_cast<Scalar>(1.0 / rho_pen);
  q.comp1 += eta.comp1 * inv_rho;
  q.comp2 += eta.comp2 * inv_rho;
  if (lambda == 0.0) return q;
  const Scalar thresh = static_cast<Scalar>(lambda / rho_pen);
  const PixelArray<Scalar> mag = q.magnitude();
  const PixelArray<Scalar> scale =
      mag.unaryExpr([&](Scalar m) { return m > thresh ? Scalar(1) - thresh / m : Scalar(0); });
  q.comp1 *= scale;
  q.comp2 *= scale;
  return q;
}

/// Dual ascent; returns the updated multiplier.
template <typename Scalar>
VectorField<Scalar> dual_step(const ScalarField<Scalar>& z, const VectorField<Scalar>& phi,
                              const VectorField<Scalar>& eta, double rho_pen, bool literal_sign = false) {
  const VectorField<Scalar> r = gradient(z) - phi;
  const Scalar s = static_cast<Scalar>(literal_sign ? -rho_pen : rho_pen);
  return eta + s * r;
}

/// Augmented-Lagrangian pieces in z at fixed (phi, eta): value and L2
/// gradient field of Phi(z) + <eta, grad z> + rho/2 |grad z - phi|^2.
template <typename Scalar>
struct ZSubproblem {
  const TGPosterior<Scalar>& post;
  const VectorField<Scalar>& phi;
  const VectorField<Scalar>& eta;
  double rho_pen;

  Scalar value(const ScalarField<Scalar>& z) const {
    const VectorField<Scalar> gz = gradient(z);
    const VectorField<Scalar> r = gz - phi;
    return potential_phi_field(post.op(), post.reparam(), z, post.data()) + inner(eta, gz) +
           static_cast<Scalar>(0.5 * rho_pen) * inner(r, r);
  }

  ScalarField<Scalar> field_gradient(const ScalarField<Scalar>& z) const {
    ScalarField<Scalar> g = phi_field_gradient(post.op(), post.reparam(), z, post.data());
    const VectorField<Scalar> r = gradient(z) - phi;
    g.values -= divergence(eta).values;
    g.values -= static_cast<Scalar>(rho_pen) * divergence(r).values;
    return g;
  }

  /// Gradient with respect to the standard-normal coefficients.
  CoeffVector<Scalar> coeff_gradient(const ScalarField<Scalar>& z) const {
    return apply_c0_sqrt(post.basis(), project(post.basis(), field_gradient(z), post.n_modes()));
  }
};

template <typename Scalar = double>
struct ZStepReport {
  CoeffVector<Scalar> z;
  Scalar objective_entry = 0;
  Scalar objective_exit = 0;
  Scalar grad_norm = 0;
  int iterations = 0;
  bool reached_tol = false;
};

/// Inexact z-minimization: gradient descent in coefficient space with a
/// Barzilai-Borwein trial step and Armijo backtracking.
template <typename Scalar>
ZStepReport<Scalar> z_step(const TGPosterior<Scalar>& post, const AdmmState<Scalar>& state,
                           int inner_iters, double inner_tol) {
  const ZSubproblem<Scalar> sub{post, state.phi, state.eta, state.rho_pen};
  const KLBasis<Scalar>& basis = post.basis();

  ZStepReport<Scalar> rep;
  CoeffVector<Scalar> c = state.z;
  ScalarField<Scalar> z = synthesize(basis, c);
  Scalar f = sub.value(z);
  CoeffVector<Scalar> g = sub.coeff_gradient(z);
  rep.objective_entry = f;

  Scalar step = Scalar(1);
  CoeffVector<Scalar> c_prev, g_prev;
  int failures = 0;
  int it = 0;
  for (; it < inner_iters; ++it) {
    const Scalar gn = g.norm();
    if (gn <= static_cast<Scalar>(inner_tol)) {
      rep.reached_tol = true;
      break;
    }
    if (it > 0) {
      const CoeffVector<Scalar> s = c - c_prev, yv = g - g_prev;
      const Scalar sy = s.dot(yv);
      if (sy > Scalar(0)) step = s.squaredNorm() / sy;
    } else {
      step = std::min(Scalar(1), Scalar(1) / gn);
    }
    // Armijo backtracking; a step too small to move c in floating point
    // means no further progress is representable.
    bool accepted = false, stalled = false;
    while (!accepted && !stalled) {
      const CoeffVector<Scalar> trial = c - step * g;
      const ScalarField<Scalar> zt = synthesize(basis, trial);
      Scalar ft = std::numeric_limits<Scalar>::infinity();
      try {
        ft = sub.value(zt);
      } catch (const std::domain_error&) {
      }
      if (std::isfinite(ft) && ft <= f - Scalar(1e-4) * step * gn * gn) {
        c_prev = c;
        g_prev = g;
        c = trial;
        z = zt;
        f = ft;
        g = sub.coeff_gradient(z);
        accepted = true;
        failures = 0;
      } else {
        step *= Scalar(0.5);
        stalled = ++failures >= 60 ||
                  step * gn <= std::numeric_limits<Scalar>::epsilon() * (Scalar(1) + c.norm());
      }
    }
    if (stalled) break;
  }
  rep.z = c;
  rep.objective_exit = f;
  rep.grad_norm = g.norm();
  rep.iterations = it;
  if (!rep.reached_tol && rep.grad_norm <= static_cast<Scalar>(inner_tol)) rep.reached_tol = true;
  return rep;
}

template <typename Scalar>
Scalar map_objective(const TGPosterior<Scalar>& post, const CoeffVector<Scalar>& c) {
  return potential_psi(post, c);
}

/// ADMM for min Phi(z) + lambda |grad z|_{2,1} s.t. grad z = phi. Stops when
/// both primal and dual residuals are below tol, or after max_outer sweeps.
template <typename Scalar>
AdmmResult<Scalar> solve_map(const TGPosterior<Scalar>& post, const AdmmOptions& opt,
                             const CoeffVector<Scalar>* init = nullptr) {
  opt.validate();
  AdmmResult<Scalar> res;
  AdmmState<Scalar>& st = res.state;
  st.z = init ? *init : CoeffVector<Scalar>::Zero(post.n_modes());
  if (st.z.size() != post.n_modes()) throw std::invalid_argument("solve_map: init length mismatch");
  st.rho_pen = opt.rho_pen;
  ScalarField<Scalar> z = synthesize(post.basis(), st.z);
  st.phi = gradient(z);
  st.eta = VectorField<Scalar>(post.grid());

  for (int k = 1; k <= opt.max_outer; ++k) {
    const ZStepReport<Scalar> zr = z_step(post, st, opt.inner_iters, opt.inner_tol);
    st.z = zr.z;
    z = synthesize(post.basis(), st.z);
    VectorField<Scalar> phi_new = phi_step(z, st.eta, st.rho_pen, post.lambda());
    const ScalarField<Scalar> dphi_div = divergence(phi_new - st.phi);
    st.phi = std::move(phi_new);
    st.eta = dual_step(z, st.phi, st.eta, st.rho_pen, opt.literal_dual_sign);
    st.iteration = k;
    st.primal_residual = l2_norm(gradient(z) - st.phi);
    st.dual_residual = static_cast<Scalar>(st.rho_pen) * l2_norm(dphi_div);
    res.history.push_back({k, static_cast<double>(st.primal_residual),
                           static_cast<double>(st.dual_residual),
                           static_cast<double>(map_objective(post, st.z))});
    if (st.primal_residual <= static_cast<Scalar>(opt.tol) &&
        st.dual_residual <= static_cast<Scalar>(opt.tol)) {
      res.converged = true;
      break;
    }
  }
  if (!std::isnan(opt.direction_rho)) st.rho_pen = opt.direction_rho;
  return res;
}

/// g(z) = T_K D_z L_rho(z, phi*, eta*), as <., e_i> for i < k_proj and
/// zero beyond.
template <typename Scalar>
Vector<Scalar> offset_direction(const TGPosterior<Scalar>& post, const CoeffVector<Scalar>& c,
                                const AdmmState<Scalar>& solution, Index k_proj) {
  if (k_proj < 0 || k_proj > post.n_modes())
    throw std::out_of_range("offset_direction: k_proj=" + std::to_string(k_proj) + " outside [0, " +
                            std::to_string(post.n_modes()) + "]");
  Vector<Scalar> g = Vector<Scalar>::Zero(post.n_modes());
  if (k_proj == 0) return g;
  const ZSubproblem<Scalar> sub{post, solution.phi, solution.eta, solution.rho_pen};
  g.head(k_proj) = project(post.basis(), sub.field_gradient(synthesize(post.basis(), c)), k_proj);
  return g;
}

}  // namespace tgpet
