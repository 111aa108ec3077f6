#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "tgpet/diagnostics.hpp"
#include "tgpet/grid.hpp"
#include "tgpet/kl_basis.hpp"
#include "tgpet/reparam.hpp"
#include "tgpet/samplers.hpp"

namespace tgpet {

/// Start index of the narrowest m-sample window for every m = 1..n
/// (entry m - 1). O(n^2).
template <typename Scalar>
std::vector<Index> window_starts(const std::vector<Scalar>& sorted) {
  const Index n = static_cast<Index>(sorted.size());
  std::vector<Index> starts(static_cast<std::size_t>(n), 0);
  const Scalar* x = sorted.data();
  for (Index m = 2; m <= n; ++m) {
    Index best = 0;
    Scalar w = x[m - 1] - x[0];
    for (Index i = 1; i + m <= n; ++i) {
      const Scalar d = x[i + m - 1] - x[i];
      if (d < w) {
        w = d;
        best = i;
      }
    }
    starts[static_cast<std::size_t>(m - 1)] = best;
  }
  return starts;
}

/// Smallest level m/n whose narrowest m-sample window contains `value`.
/// Sample HPDIs are not nested in m, so this scans the whole level grid
/// rather than bisecting. Values outside the sample range map to 1.
template <typename Scalar>
double credible_level(const std::vector<Scalar>& sorted, const std::vector<Index>& starts, Scalar value) {
  const Index n = static_cast<Index>(sorted.size());
  if (n == 0) throw std::invalid_argument("credible_level: no samples");
  if (value < sorted.front() || value > sorted.back()) return 1.0;
  for (Index m = 1; m <= n; ++m) {
    const auto s = static_cast<std::size_t>(starts[static_cast<std::size_t>(m - 1)]);
    if (sorted[s] <= value && value <= sorted[s + static_cast<std::size_t>(m) - 1])
      return static_cast<double>(m) / static_cast<double>(n);
  }
  return 1.0;
}

template <typename Scalar>
double credible_level(const std::vector<Scalar>& sorted, Scalar value) {
  if (sorted.empty()) throw std::invalid_argument("credible_level: no samples");
  return credible_level(sorted, window_starts(sorted), value);
}

/// Per-pixel minimal credible level (1 - alpha)* of a test image.
template <typename Scalar = double>
struct CredibleLevelMap {
  ScalarField<double> levels;
  Index n_samples = 0;

  /// Mean level over pixels where mask is true.
  double masked_mean(const PixelArray<bool>& mask) const {
    double s = 0.0;
    Index n = 0;
    for (Index i = 0; i < levels.grid.nx; ++i)
      for (Index j = 0; j < levels.grid.ny; ++j)
        if (mask(i, j)) {
          s += levels(i, j);
          ++n;
        }
    return n ? s / static_cast<double>(n) : std::numeric_limits<double>::quiet_NaN();
  }

  /// Largest mean level over all square windows of side `side` pixels.
  double max_window_mean(Index side) const {
    const Grid& g = levels.grid;
    side = std::clamp<Index>(side, 1, std::min(g.nx, g.ny));
    double best = 0.0;
    for (Index i = 0; i + side <= g.nx; ++i)
      for (Index j = 0; j + side <= g.ny; ++j)
        best = std::max(best, levels.values.block(i, j, side, side).mean());
    return best;
  }
};

/// Per-pixel levels cost O(n^2) in the sample count n; a positive
/// `max_samples` evaluates them on an evenly thinned subsample of that size.
template <typename Scalar>
CredibleLevelMap<Scalar> credible_level_map(const Chain<Scalar>& chain, const KLBasis<Scalar>& basis,
                                            const Reparam& rep, const ScalarField<Scalar>& test_image,
                                            Index max_samples = 0) {
  require_same_grid(basis.grid(), test_image.grid, "credible_level_map");
  if (chain.size() == 0) throw std::invalid_argument("credible_level_map: empty chain");
  if (max_samples < 0) throw std::invalid_argument("credible_level_map: max_samples must be >= 0");
  const Index stride = max_samples > 0 ? (chain.size() + max_samples - 1) / max_samples : 1;
  const auto series = pixel_series(thinned(chain, stride), basis, rep);
  CredibleLevelMap<Scalar> out{ScalarField<double>(basis.grid()), series.cols()};
  std::vector<Scalar> buf(static_cast<std::size_t>(series.cols()));
  for (Index p = 0; p < series.rows(); ++p) {
    for (Index s = 0; s < series.cols(); ++s) buf[static_cast<std::size_t>(s)] = series(p, s);
    std::sort(buf.begin(), buf.end());
    out.levels.flat()(p) = credible_level(buf, window_starts(buf), test_image.flat()(p));
  }
  return out;
}

enum class ArtifactKind { add_blob, remove_blob, add_noise };

/// Disk in unit-square coordinates.
struct BlobGeometry {
  double cx = 0.5;
  double cy = 0.5;
  double radius = 0.1;

  void validate() const {
    if (!(radius > 0.0)) throw std::invalid_argument("BlobGeometry: radius must be > 0");
    if (cx - radius < 0.0 || cx + radius > 1.0 || cy - radius < 0.0 || cy + radius > 1.0)
      throw std::out_of_range("BlobGeometry: disk leaves the unit square");
  }

  PixelArray<bool> mask(const Grid& g) const {
    PixelArray<bool> m(g.nx, g.ny);
    for (Index i = 0; i < g.nx; ++i)
      for (Index j = 0; j < g.ny; ++j) {
        const double x = (static_cast<double>(i) + 0.5) * g.hx() - cx;
        const double y = (static_cast<double>(j) + 0.5) * g.hy() - cy;
        m(i, j) = x * x + y * y <= radius * radius;
      }
    return m;
  }
};

/// Edits a test image: shift a disk up or down by `magnitude`, or add
/// i.i.d. Gaussian noise of standard deviation `magnitude`. Results are
/// clamped to [lo, hi].
template <typename Scalar, typename Rng>
ScalarField<Scalar> inject_artifact(const ScalarField<Scalar>& image, ArtifactKind kind,
                                    const BlobGeometry& geom, double magnitude, Rng& rng,
                                    double lo = 0.0, double hi = std::numeric_limits<double>::infinity()) {
  if (!(magnitude >= 0.0)) throw std::invalid_argument("inject_artifact: magnitude must be >= 0");
  ScalarField<Scalar> out = image;
  auto clamp = [&](Scalar v) { return static_cast<Scalar>(std::clamp<double>(v, lo, hi)); };
  if (kind == ArtifactKind::add_noise) {
    if (magnitude == 0.0) return out;
    std::normal_distribution<double> noise(0.0, magnitude);
    for (Index p = 0; p < out.values.size(); ++p)
      out.flat()(p) = clamp(out.flat()(p) + static_cast<Scalar>(noise(rng)));
    return out;
  }
  geom.validate();
  if (magnitude == 0.0) return out;
  const PixelArray<bool> mask = geom.mask(image.grid);
  const Scalar shift = static_cast<Scalar>(kind == ArtifactKind::add_blob ? magnitude : -magnitude);
  for (Index i = 0; i < image.grid.nx; ++i)
    for (Index j = 0; j < image.grid.ny; ++j)
      if (mask(i, j)) out(i, j) = clamp(out(i, j) + shift);
  return out;
}

}  // namespace tgpet
