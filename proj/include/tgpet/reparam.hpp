#pragma once

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "tgpet/grid.hpp"

namespace tgpet {

/// Positivity-preserving map u = (a/2) (erf(z/c) + b).
struct Reparam {
  double a = 2.0;
  double b = 2.0;
  double c = 1.0;

  void validate() const {
    if (!(a > 0.0)) throw std::invalid_argument("Reparam: a must be > 0");
    if (!(b > 1.0)) throw std::invalid_argument("Reparam: b must be > 1");
    if (!(c > 0.0)) throw std::invalid_argument("Reparam: c must be > 0");
  }

  double lower() const { return 0.5 * a * (b - 1.0); }
  double upper() const { return 0.5 * a * (b + 1.0); }
  /// Global Lipschitz constant of the map, sup f' = a / (c sqrt(pi)).
  double lipschitz() const { return a / (c * std::sqrt(std::numbers::pi)); }

  template <typename Scalar>
  Scalar value(Scalar z) const {
    return static_cast<Scalar>(0.5 * a) * (std::erf(z / static_cast<Scalar>(c)) + static_cast<Scalar>(b));
  }

  template <typename Scalar>
  Scalar derivative(Scalar z) const {
    const Scalar t = z / static_cast<Scalar>(c);
    return static_cast<Scalar>(lipschitz()) * std::exp(-t * t);
  }
};

template <typename Scalar>
ScalarField<Scalar> reparam_apply(const Reparam& rep, const ScalarField<Scalar>& z) {
  return {z.grid, z.values.unaryExpr([&](Scalar v) { return rep.value(v); })};
}

template <typename Scalar>
ScalarField<Scalar> reparam_deriv(const Reparam& rep, const ScalarField<Scalar>& z) {
  return {z.grid, z.values.unaryExpr([&](Scalar v) { return rep.derivative(v); })};
}

}  // namespace tgpet
