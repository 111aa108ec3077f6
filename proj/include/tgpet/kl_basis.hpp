#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "tgpet/grid.hpp"

namespace tgpet {

/// Exponential covariance K(x, x') = gamma * exp(-|x - x'|_1 / corr_len).
struct CovarianceSpec {
  double gamma = 2.0;
  double corr_len = 1e-3;

  void validate() const {
    if (!(gamma > 0.0)) throw std::invalid_argument("CovarianceSpec: gamma must be > 0");
    if (!(corr_len > 0.0)) throw std::invalid_argument("CovarianceSpec: corr_len must be > 0");
  }
};

/// Standard-normal KL coefficients; the sampler state.
template <typename Scalar = double>
using CoeffVector = Vector<Scalar>;

/// One tensor-product mode e(i, j) = ux(i, kx) * uy(j, ky).
struct ModeIndex {
  Index kx = 0;
  Index ky = 0;
};

/// Truncated Karhunen-Loeve system of N(mean, C0) on a grid.
///
/// The L1 exponential kernel factorizes over the two axes, so every
/// eigenfield is a product of 1D eigenvectors. Only the 1D factors and the
/// retained (kx, ky) pairs are stored; eigenfields are formed on demand and
/// synthesis/projection run as two dense products.
template <typename Scalar = double>
class KLBasis {
 public:
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

  KLBasis() = default;
  KLBasis(Grid grid, CovarianceSpec cov, Matrix ux, Matrix uy, std::vector<ModeIndex> modes,
          Vector<Scalar> eigenvalues, ScalarField<Scalar> mean, Index n_clamped = 0)
      : grid_(grid),
        cov_(cov),
        ux_(std::move(ux)),
        uy_(std::move(uy)),
        modes_(std::move(modes)),
        eigenvalues_(std::move(eigenvalues)),
        sqrt_eigenvalues_(eigenvalues_.cwiseSqrt()),
        mean_(std::move(mean)),
        n_clamped_(n_clamped) {
    if (static_cast<Index>(modes_.size()) != eigenvalues_.size())
      throw std::invalid_argument("KLBasis: mode list and eigenvalues differ in length");
    require_same_grid(grid_, mean_.grid, "KLBasis mean");
  }

  const Grid& grid() const { return grid_; }
  const CovarianceSpec& covariance() const { return cov_; }
  Index n_modes() const { return eigenvalues_.size(); }
  const Vector<Scalar>& eigenvalues() const { return eigenvalues_; }
  const Vector<Scalar>& sqrt_eigenvalues() const { return sqrt_eigenvalues_; }
  const std::vector<ModeIndex>& modes() const { return modes_; }
  /// Columns are L2-normalized 1D eigenvectors (h * sum u^2 = 1).
  const Matrix& factor_x() const { return ux_; }
  const Matrix& factor_y() const { return uy_; }
  const ScalarField<Scalar>& mean_field() const { return mean_; }
  /// Number of eigenvalues that came out below 1e-14 * eta_1 and were clamped.
  Index n_clamped() const { return n_clamped_; }

  void set_mean_field(ScalarField<Scalar> mean) {
    require_same_grid(grid_, mean.grid, "KLBasis::set_mean_field");
    mean_ = std::move(mean);
  }

  ScalarField<Scalar> eigenfield(Index k) const {
    check_mode(k);
    const ModeIndex& m = modes_[static_cast<std::size_t>(k)];
    return ScalarField<Scalar>(grid_, (ux_.col(m.kx) * uy_.col(m.ky).transpose()).array());
  }

  /// Field sum_k w_k e_k for expansion weights w (no mean, no sqrt(eta)).
  template <typename Derived>
  ScalarField<Scalar> expand(const Eigen::MatrixBase<Derived>& weights) const {
    if (weights.size() > n_modes())
      throw std::invalid_argument("KLBasis::expand: too many weights");
    Matrix w = Matrix::Zero(ux_.cols(), uy_.cols());
    for (Index k = 0; k < weights.size(); ++k) {
      const ModeIndex& m = modes_[static_cast<std::size_t>(k)];
      w(m.kx, m.ky) = weights(k);
    }
    const Matrix tmp = ux_ * w;
    return ScalarField<Scalar>(grid_, (tmp * uy_.transpose()).array());
  }

  /// <f, e_k> for the first k modes.
  Vector<Scalar> inner_products(const ScalarField<Scalar>& f, Index k) const {
    require_same_grid(grid_, f.grid, "KLBasis::inner_products");
    if (k < 0 || k > n_modes())
      throw std::out_of_range("KLBasis::inner_products: k=" + std::to_string(k) +
                              " outside [0, " + std::to_string(n_modes()) + "]");
    Vector<Scalar> out(k);
    if (k == 0) return out;
    const Matrix fm = f.values.matrix();
    const Matrix tmp = ux_.transpose() * fm;
    const Matrix coeffs = (tmp * uy_) * static_cast<Scalar>(grid_.cell_area());
    for (Index i = 0; i < k; ++i) {
      const ModeIndex& m = modes_[static_cast<std::size_t>(i)];
      out(i) = coeffs(m.kx, m.ky);
    }
    return out;
  }

 private:
  void check_mode(Index k) const {
    if (k < 0 || k >= n_modes()) throw std::out_of_range("KLBasis: mode index out of range");
  }

  Grid grid_;
  CovarianceSpec cov_;
  Matrix ux_;
  Matrix uy_;
  std::vector<ModeIndex> modes_;
  Vector<Scalar> eigenvalues_;
  Vector<Scalar> sqrt_eigenvalues_;
  ScalarField<Scalar> mean_;
  Index n_clamped_ = 0;
};

namespace detail {

/// Eigenpairs of the weighted 1D kernel h*exp(-|x_i - x_j| / d) at pixel
/// centres, eigenvalues descending, eigenvectors scaled to unit weighted norm.
template <typename Scalar>
std::pair<Vector<Scalar>, Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>> kernel_eigen_1d(
    Index n, double corr_len) {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  const double h = 1.0 / static_cast<double>(n);
  Matrix k(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j)
      k(i, j) = static_cast<Scalar>(h * std::exp(-h * std::abs(static_cast<double>(i - j)) / corr_len));
  Eigen::SelfAdjointEigenSolver<Matrix> solver(k);
  if (solver.info() != Eigen::Success)
    throw std::runtime_error("kernel_eigen_1d: eigensolver failed");
  // SelfAdjointEigenSolver sorts ascending.
  Vector<Scalar> vals = solver.eigenvalues().reverse();
  Matrix vecs = solver.eigenvectors().rowwise().reverse() / static_cast<Scalar>(std::sqrt(h));
  // Fix the sign so the largest-magnitude entry of each vector is positive.
  for (Index c = 0; c < n; ++c) {
    Index arg = 0;
    vecs.col(c).cwiseAbs().maxCoeff(&arg);
    if (vecs(arg, c) < Scalar(0)) vecs.col(c) = -vecs.col(c);
  }
  return {vals, vecs};
}

}  // namespace detail

/// Builds the truncated KL system of the exponential L1 kernel on `grid`.
template <typename Scalar = double>
KLBasis<Scalar> build_kl_basis(const Grid& grid, const CovarianceSpec& cov, Index n_modes) {
  cov.validate();
  if (n_modes < 1 || n_modes > grid.size())
    throw std::invalid_argument("build_kl_basis: n_modes=" + std::to_string(n_modes) +
                                " outside [1, " + std::to_string(grid.size()) + "]");
  auto [vx, ux] = detail::kernel_eigen_1d<Scalar>(grid.nx, cov.corr_len);
  auto [vy, uy] = detail::kernel_eigen_1d<Scalar>(grid.ny, cov.corr_len);

  struct Candidate {
    Scalar value;
    Index kx, ky;
  };
  std::vector<Candidate> all;
  all.reserve(static_cast<std::size_t>(grid.size()));
  for (Index i = 0; i < grid.nx; ++i)
    for (Index j = 0; j < grid.ny; ++j)
      all.push_back({static_cast<Scalar>(cov.gamma) * vx(i) * vy(j), i, j});
  std::stable_sort(all.begin(), all.end(),
                   [](const Candidate& a, const Candidate& b) { return a.value > b.value; });

  const Scalar floor = all.front().value * static_cast<Scalar>(1e-14);
  std::vector<ModeIndex> modes;
  Vector<Scalar> eig(n_modes);
  Index clamped = 0;
  for (Index k = 0; k < n_modes; ++k) {
    const Candidate& c = all[static_cast<std::size_t>(k)];
    modes.push_back({c.kx, c.ky});
    eig(k) = c.value;
    if (!(c.value >= floor)) {
      eig(k) = floor;
      ++clamped;
    }
  }
  return KLBasis<Scalar>(grid, cov, std::move(ux), std::move(uy), std::move(modes), std::move(eig),
                         ScalarField<Scalar>(grid), clamped);
}

/// z = mean + sum_i c_i sqrt(eta_i) e_i
template <typename Scalar, typename Derived>
ScalarField<Scalar> synthesize(const KLBasis<Scalar>& basis, const Eigen::MatrixBase<Derived>& c) {
  if (c.size() != basis.n_modes())
    throw std::invalid_argument("synthesize: coefficient length " + std::to_string(c.size()) +
                                " != n_modes " + std::to_string(basis.n_modes()));
  ScalarField<Scalar> out = basis.expand(c.derived().cwiseProduct(basis.sqrt_eigenvalues()));
  out.values += basis.mean_field().values;
  return out;
}

/// Plain L2 projection onto span{e_1..e_k}, returned as <f, e_i>.
template <typename Scalar>
Vector<Scalar> project(const KLBasis<Scalar>& basis, const ScalarField<Scalar>& f, Index k) {
  return basis.inner_products(f, k);
}

/// i.i.d. standard normal coefficients.
template <typename Scalar, typename Rng>
CoeffVector<Scalar> sample_reference(const KLBasis<Scalar>& basis, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  CoeffVector<Scalar> c(basis.n_modes());
  for (Index i = 0; i < c.size(); ++i) c(i) = static_cast<Scalar>(normal(rng));
  return c;
}

// C0 and C0^{1/2} act on KL-weight vectors as diag(eta) and diag(sqrt(eta)).

template <typename Scalar, typename Derived>
Vector<Scalar> apply_c0(const KLBasis<Scalar>& basis, const Eigen::MatrixBase<Derived>& g) {
  if (g.size() != basis.n_modes()) throw std::invalid_argument("apply_c0: length mismatch");
  return g.derived().cwiseProduct(basis.eigenvalues());
}

template <typename Scalar, typename Derived>
Vector<Scalar> apply_c0_sqrt(const KLBasis<Scalar>& basis, const Eigen::MatrixBase<Derived>& g) {
  if (g.size() != basis.n_modes()) throw std::invalid_argument("apply_c0_sqrt: length mismatch");
  return g.derived().cwiseProduct(basis.sqrt_eigenvalues());
}

/// Seeds an independent stream for chain `index` of a run with `master_seed`.
inline std::mt19937_64 make_stream(std::uint64_t master_seed, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(master_seed),
                    static_cast<std::uint32_t>(master_seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
  return std::mt19937_64(seq);
}

}  // namespace tgpet
