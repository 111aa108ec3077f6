#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "tgpet/grid.hpp"

namespace tgpet {

/// Parallel-beam acquisition geometry.
struct RadonGeometry {
  Index n_angles = 60;
  Index n_det = 128;
  double kappa = 1.0;

  void validate() const {
    if (n_angles < 1) throw std::invalid_argument("RadonGeometry: n_angles must be >= 1");
    if (n_det < 1) throw std::invalid_argument("RadonGeometry: n_det must be >= 1");
    if (!(kappa > 0.0)) throw std::invalid_argument("RadonGeometry: kappa must be > 0");
  }

  double angle(Index a) const {
    return std::numbers::pi * static_cast<double>(a) / static_cast<double>(n_angles);
  }
  /// Signed detector offset of bin b from the domain centre; bins tile
  /// the projected width sqrt(2) of the unit square.
  double detector_offset(Index b) const {
    const double width = std::numbers::sqrt2;
    return -0.5 * width + (static_cast<double>(b) + 0.5) * width / static_cast<double>(n_det);
  }
};

/// Pixel-intersection lengths of one line through the unit square
/// (exact Siddon traversal). Returns (flat pixel index, length) pairs.
inline std::vector<std::pair<Index, double>> trace_ray(const Grid& grid, double angle, double offset) {
  const double dx = std::cos(angle), dy = std::sin(angle);
  const double px = 0.5 - offset * dy, py = 0.5 + offset * dx;
  constexpr double eps = 1e-15;

  double t_lo = -std::numeric_limits<double>::infinity();
  double t_hi = std::numeric_limits<double>::infinity();
  auto clip = [&](double p, double d) {
    if (std::abs(d) < eps) {
      if (p < 0.0 || p > 1.0) t_lo = std::numeric_limits<double>::infinity();
      return;
    }
    double t0 = (0.0 - p) / d, t1 = (1.0 - p) / d;
    if (t0 > t1) std::swap(t0, t1);
    t_lo = std::max(t_lo, t0);
    t_hi = std::min(t_hi, t1);
  };
  clip(px, dx);
  clip(py, dy);
  if (!(t_hi > t_lo)) return {};

  std::vector<double> ts{t_lo, t_hi};
  auto planes = [&](double p, double d, Index n) {
    if (std::abs(d) < eps) return;
    for (Index k = 1; k < n; ++k) {
      const double t = (static_cast<double>(k) / static_cast<double>(n) - p) / d;
      if (t > t_lo && t < t_hi) ts.push_back(t);
    }
  };
  planes(px, dx, grid.nx);
  planes(py, dy, grid.ny);
  std::sort(ts.begin(), ts.end());

  std::map<Index, double> acc;
  for (std::size_t k = 0; k + 1 < ts.size(); ++k) {
    const double len = ts[k + 1] - ts[k];
    if (len <= 1e-14) continue;
    const double tm = 0.5 * (ts[k] + ts[k + 1]);
    const Index i = std::clamp<Index>(static_cast<Index>(std::floor((px + tm * dx) * grid.nx)), 0, grid.nx - 1);
    const Index j = std::clamp<Index>(static_cast<Index>(std::floor((py + tm * dy) * grid.ny)), 0, grid.ny - 1);
    acc[i * grid.ny + j] += len;
  }
  return {acc.begin(), acc.end()};
}

/// Sparse line-integral operator theta = kappa * A u. Rays with zero
/// total intersection are dropped at build time.
template <typename Scalar = double>
class RadonOperator {
 public:
  using SparseMatrix = Eigen::SparseMatrix<Scalar, Eigen::RowMajor>;

  RadonOperator() = default;
  RadonOperator(const Grid& grid, const RadonGeometry& geom) : grid_(grid), geom_(geom) {
    geom_.validate();
    std::vector<Eigen::Triplet<Scalar>> triplets;
    Index row = 0;
    std::vector<double> totals;
    for (Index a = 0; a < geom_.n_angles; ++a) {
      for (Index b = 0; b < geom_.n_det; ++b) {
        const auto hits = trace_ray(grid_, geom_.angle(a), geom_.detector_offset(b));
        double total = 0.0;
        for (const auto& [pix, len] : hits) total += len;
        if (!(total > 1e-12)) continue;
        for (const auto& [pix, len] : hits)
          triplets.emplace_back(row, pix, static_cast<Scalar>(geom_.kappa * len));
        angle_index_.push_back(a);
        det_index_.push_back(b);
        totals.push_back(total);
        ++row;
      }
    }
    if (row == 0) throw std::invalid_argument("RadonOperator: no ray intersects the domain");
    matrix_.resize(row, grid_.size());
    matrix_.setFromTriplets(triplets.begin(), triplets.end());
    matrix_.makeCompressed();
    ray_length_ = Eigen::Map<const Eigen::VectorXd>(totals.data(), row).template cast<Scalar>();
  }

  const Grid& grid() const { return grid_; }
  const RadonGeometry& geometry() const { return geom_; }
  double kappa() const { return geom_.kappa; }
  /// Retained ray count d.
  Index n_rays() const { return matrix_.rows(); }
  Index angle_index(Index ray) const { return angle_index_[static_cast<std::size_t>(ray)]; }
  Index detector_index(Index ray) const { return det_index_[static_cast<std::size_t>(ray)]; }
  /// Chord length of each retained ray inside the unit square (no kappa).
  const Vector<Scalar>& ray_lengths() const { return ray_length_; }
  /// Rows are rays, columns flat pixel indices; entries kappa * length.
  const SparseMatrix& matrix() const { return matrix_; }

  Vector<Scalar> apply(const ScalarField<Scalar>& u) const {
    require_same_grid(grid_, u.grid, "radon_apply");
    return matrix_ * u.flat();
  }

  ScalarField<Scalar> adjoint(const Vector<Scalar>& w) const {
    if (w.size() != n_rays())
      throw std::invalid_argument("radon_adjoint: expected " + std::to_string(n_rays()) +
                                  " entries, got " + std::to_string(w.size()));
    ScalarField<Scalar> out(grid_);
    out.flat() = matrix_.transpose() * w;
    return out;
  }

  /// Norm of u -> A u from the weighted L2 space to Euclidean R^d,
  /// by power iteration on A^T A.
  Scalar operator_norm(int iterations = 500) const {
    Vector<Scalar> x = Vector<Scalar>::Ones(grid_.size());
    Scalar lambda = 0;
    for (int it = 0; it < iterations; ++it) {
      Vector<Scalar> y = matrix_.transpose() * (matrix_ * x);
      const Scalar n = y.norm();
      if (n == Scalar(0)) return 0;
      const Scalar next = x.dot(y) / x.squaredNorm();
      x = y / n;
      if (std::abs(next - lambda) <= Scalar(1e-13) * std::abs(next)) {
        lambda = next;
        break;
      }
      lambda = next;
    }
    return std::sqrt(lambda / static_cast<Scalar>(grid_.cell_area()));
  }

 private:
  Grid grid_;
  RadonGeometry geom_;
  SparseMatrix matrix_;
  std::vector<Index> angle_index_;
  std::vector<Index> det_index_;
  Vector<Scalar> ray_length_;
};

template <typename Scalar>
Vector<Scalar> radon_apply(const RadonOperator<Scalar>& op, const ScalarField<Scalar>& u) {
  return op.apply(u);
}

template <typename Scalar>
ScalarField<Scalar> radon_adjoint(const RadonOperator<Scalar>& op, const Vector<Scalar>& w) {
  return op.adjoint(w);
}

}  // namespace tgpet
