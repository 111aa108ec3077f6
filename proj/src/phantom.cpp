#include "tgpet/phantom.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

namespace tgpet {
namespace {

struct Ellipse {
  double cx, cy, ax, ay, angle;
  double level;  // fraction of the reparam range

  bool contains(double x, double y) const {
    const double c = std::cos(angle), s = std::sin(angle);
    const double dx = x - cx, dy = y - cy;
    const double u = (c * dx + s * dy) / ax, v = (-s * dx + c * dy) / ay;
    return u * u + v * v <= 1.0;
  }
};

// Later entries overwrite earlier ones.
const std::vector<Ellipse>& head() {
  static const std::vector<Ellipse> shapes = {
      {0.50, 0.50, 0.40, 0.32, 0.0, 0.80},    // skull
      {0.50, 0.50, 0.36, 0.28, 0.0, 0.45},    // brain
      {0.44, 0.42, 0.10, 0.045, 0.5, 0.12},   // left ventricle
      {0.44, 0.58, 0.10, 0.045, -0.5, 0.12},  // right ventricle
      {0.66, 0.40, 0.06, 0.06, 0.0, 0.78},    // lesion
      {0.30, 0.62, 0.045, 0.045, 0.0, 0.72},  // lesion
  };
  return shapes;
}

constexpr double kBackground = 0.05;

// Newton on erf(x) = y, |y| < 1.
double erf_inverse(double y) {
  double x = 0.0;
  for (int it = 0; it < 100; ++it) {
    const double step = (std::erf(x) - y) / (2.0 / std::sqrt(std::numbers::pi) * std::exp(-x * x));
    x -= std::clamp(step, -1.0, 1.0);
    if (std::abs(step) < 1e-15 * std::max(1.0, std::abs(x))) break;
  }
  return x;
}
constexpr double kMargin = 0.05;

}  // namespace

ScalarField<double> builtin_phantom(const Grid& grid, const Reparam& rep) {
  rep.validate();
  const double lo = rep.lower(), span = rep.upper() - rep.lower();
  ScalarField<double> u(grid);
  constexpr int ss = 4;  // supersampling per axis
  for (Index i = 0; i < grid.nx; ++i)
    for (Index j = 0; j < grid.ny; ++j) {
      double acc = 0.0;
      for (int a = 0; a < ss; ++a)
        for (int b = 0; b < ss; ++b) {
          const double x = (static_cast<double>(i) + (a + 0.5) / ss) * grid.hx();
          const double y = (static_cast<double>(j) + (b + 0.5) / ss) * grid.hy();
          double level = kBackground;
          for (const auto& e : head())
            if (e.contains(x, y)) level = e.level;
          acc += level;
        }
      u(i, j) = lo + span * acc / (ss * ss);
    }
  return u;
}

ScalarField<double> gray_to_intensity(const ScalarField<double>& gray, const Reparam& rep) {
  rep.validate();
  const double lo = rep.lower(), span = rep.upper() - rep.lower();
  return {gray.grid, gray.values.unaryExpr([&](double t) {
            return lo + span * (kMargin + (1.0 - 2.0 * kMargin) * std::clamp(t, 0.0, 1.0));
          })};
}

ScalarField<double> latent_from_image(const ScalarField<double>& u, const Reparam& rep) {
  rep.validate();
  const double eps = 1e-6 * (rep.upper() - rep.lower());
  return {u.grid, u.values.unaryExpr([&](double v) {
            const double t = std::clamp(v, rep.lower() + eps, rep.upper() - eps);
            return rep.c * erf_inverse(2.0 * t / rep.a - rep.b);
          })};
}

}  // namespace tgpet
