#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace tgpet {

using Index = Eigen::Index;

/// Uniform pixel grid on the unit square. Pixel (i, j) covers
/// [i*hx, (i+1)*hx] x [j*hy, (j+1)*hy]; i runs along the first axis.
struct Grid {
  Index nx = 0;
  Index ny = 0;

  Grid() = default;
  Grid(Index nx_, Index ny_) : nx(nx_), ny(ny_) {
    if (nx < 2 || ny < 2)
      throw std::invalid_argument("Grid: need at least 2 pixels per axis, got " +
                                  std::to_string(nx) + "x" + std::to_string(ny));
  }

  double hx() const { return 1.0 / static_cast<double>(nx); }
  double hy() const { return 1.0 / static_cast<double>(ny); }
  /// Spacing along the first axis; equals hy on square grids.
  double h() const { return hx(); }
  double cell_area() const { return hx() * hy(); }
  Index size() const { return nx * ny; }

  friend bool operator==(const Grid&, const Grid&) = default;
};

inline void require_same_grid(const Grid& a, const Grid& b, const char* what) {
  if (a != b)
    throw std::invalid_argument(std::string(what) + ": grid mismatch (" + std::to_string(a.nx) +
                                "x" + std::to_string(a.ny) + " vs " + std::to_string(b.nx) + "x" +
                                std::to_string(b.ny) + ")");
}

template <typename Scalar>
using PixelArray = Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// Discretized scalar function; values(i, j) stored row-major so the flat
/// view is index i*ny + j.
template <typename Scalar = double>
struct ScalarField {
  Grid grid;
  PixelArray<Scalar> values;

  ScalarField() = default;
  explicit ScalarField(const Grid& g) : grid(g), values(PixelArray<Scalar>::Zero(g.nx, g.ny)) {}
  ScalarField(const Grid& g, PixelArray<Scalar> v) : grid(g), values(std::move(v)) {
    if (values.rows() != g.nx || values.cols() != g.ny)
      throw std::invalid_argument("ScalarField: value shape does not match grid");
  }

  static ScalarField constant(const Grid& g, Scalar c) {
    return ScalarField(g, PixelArray<Scalar>::Constant(g.nx, g.ny, c));
  }

  Scalar& operator()(Index i, Index j) { return values(i, j); }
  Scalar operator()(Index i, Index j) const { return values(i, j); }

  Eigen::Map<Vector<Scalar>> flat() { return {values.data(), values.size()}; }
  Eigen::Map<const Vector<Scalar>> flat() const { return {values.data(), values.size()}; }

  bool all_finite() const { return values.allFinite(); }
};

template <typename Scalar = double>
struct VectorField {
  Grid grid;
  PixelArray<Scalar> comp1;
  PixelArray<Scalar> comp2;

  VectorField() = default;
  explicit VectorField(const Grid& g)
      : grid(g),
        comp1(PixelArray<Scalar>::Zero(g.nx, g.ny)),
        comp2(PixelArray<Scalar>::Zero(g.nx, g.ny)) {}
  VectorField(const Grid& g, PixelArray<Scalar> c1, PixelArray<Scalar> c2)
      : grid(g), comp1(std::move(c1)), comp2(std::move(c2)) {}

  /// Pointwise Euclidean magnitude.
  PixelArray<Scalar> magnitude() const { return (comp1.square() + comp2.square()).sqrt(); }

  bool all_finite() const { return comp1.allFinite() && comp2.allFinite(); }
};

template <typename Scalar>
ScalarField<Scalar> operator+(const ScalarField<Scalar>& a, const ScalarField<Scalar>& b) {
  require_same_grid(a.grid, b.grid, "operator+");
  return {a.grid, a.values + b.values};
}

template <typename Scalar>
ScalarField<Scalar> operator-(const ScalarField<Scalar>& a, const ScalarField<Scalar>& b) {
  require_same_grid(a.grid, b.grid, "operator-");
  return {a.grid, a.values - b.values};
}

template <typename Scalar>
ScalarField<Scalar> operator*(Scalar s, const ScalarField<Scalar>& a) {
  return {a.grid, s * a.values};
}

template <typename Scalar>
VectorField<Scalar> operator+(const VectorField<Scalar>& a, const VectorField<Scalar>& b) {
  require_same_grid(a.grid, b.grid, "operator+");
  return {a.grid, a.comp1 + b.comp1, a.comp2 + b.comp2};
}

template <typename Scalar>
VectorField<Scalar> operator-(const VectorField<Scalar>& a, const VectorField<Scalar>& b) {
  require_same_grid(a.grid, b.grid, "operator-");
  return {a.grid, a.comp1 - b.comp1, a.comp2 - b.comp2};
}

template <typename Scalar>
VectorField<Scalar> operator*(Scalar s, const VectorField<Scalar>& a) {
  return {a.grid, s * a.comp1, s * a.comp2};
}

// Discrete L2 inner products carry the quadrature weight hx*hy.

template <typename Scalar>
Scalar inner(const ScalarField<Scalar>& a, const ScalarField<Scalar>& b) {
  require_same_grid(a.grid, b.grid, "inner");
  return static_cast<Scalar>(a.grid.cell_area()) * (a.values * b.values).sum();
}

template <typename Scalar>
Scalar inner(const VectorField<Scalar>& a, const VectorField<Scalar>& b) {
  require_same_grid(a.grid, b.grid, "inner");
  return static_cast<Scalar>(a.grid.cell_area()) *
         ((a.comp1 * b.comp1).sum() + (a.comp2 * b.comp2).sum());
}

template <typename Scalar>
Scalar l2_norm(const ScalarField<Scalar>& a) {
  return std::sqrt(inner(a, a));
}

template <typename Scalar>
Scalar l2_norm(const VectorField<Scalar>& a) {
  return std::sqrt(inner(a, a));
}

/// Forward differences scaled by 1/h with a replicate (Neumann) boundary:
/// the difference across the last row/column is zero.
template <typename Scalar>
VectorField<Scalar> gradient(const ScalarField<Scalar>& f) {
  const Grid& g = f.grid;
  VectorField<Scalar> out(g);
  const Scalar inv_hx = static_cast<Scalar>(g.nx);
  const Scalar inv_hy = static_cast<Scalar>(g.ny);
  out.comp1.topRows(g.nx - 1) =
      (f.values.bottomRows(g.nx - 1) - f.values.topRows(g.nx - 1)) * inv_hx;
  out.comp2.leftCols(g.ny - 1) =
      (f.values.rightCols(g.ny - 1) - f.values.leftCols(g.ny - 1)) * inv_hy;
  return out;
}

/// Negative adjoint of gradient() under the weighted inner product.
template <typename Scalar>
ScalarField<Scalar> divergence(const VectorField<Scalar>& v) {
  const Grid& g = v.grid;
  ScalarField<Scalar> out(g);
  const Scalar inv_hx = static_cast<Scalar>(g.nx);
  const Scalar inv_hy = static_cast<Scalar>(g.ny);
  // d/dx1: v1(i) for i < nx-1, minus v1(i-1) for i > 0
  out.values.topRows(g.nx - 1) += v.comp1.topRows(g.nx - 1) * inv_hx;
  out.values.bottomRows(g.nx - 1) -= v.comp1.topRows(g.nx - 1) * inv_hx;
  out.values.leftCols(g.ny - 1) += v.comp2.leftCols(g.ny - 1) * inv_hy;
  out.values.rightCols(g.ny - 1) -= v.comp2.leftCols(g.ny - 1) * inv_hy;
  return out;
}

/// Isotropic TV: integral of |grad f|.
template <typename Scalar>
Scalar tv_seminorm(const ScalarField<Scalar>& f) {
  return static_cast<Scalar>(f.grid.cell_area()) * gradient(f).magnitude().sum();
}

/// Peak signal-to-noise ratio in dB with the peak taken from `ref`.
/// Returns +infinity when the images agree exactly.
template <typename Scalar>
Scalar psnr(const ScalarField<Scalar>& f, const ScalarField<Scalar>& ref) {
  require_same_grid(f.grid, ref.grid, "psnr");
  const Scalar mse = (f.values - ref.values).square().mean();
  if (mse == Scalar(0)) return std::numeric_limits<Scalar>::infinity();
  const Scalar peak = ref.values.maxCoeff();
  return Scalar(10) * std::log10(peak * peak / mse);
}

}  // namespace tgpet
