#pragma once

#include "tgpet/grid.hpp"
#include "tgpet/reparam.hpp"

namespace tgpet {

/// Piecewise-constant head phantom (scalp background, skull ring, brain,
/// two ventricles, two hot lesions). Levels are placed inside the open
/// range of `rep` so the image is reachable through u = f(z).
ScalarField<double> builtin_phantom(const Grid& grid, const Reparam& rep = {});

/// Maps gray levels in [0, 1] affinely into [lo + margin, hi - margin] of
/// the reparametrization range, margin = 5% of the range.
ScalarField<double> gray_to_intensity(const ScalarField<double>& gray, const Reparam& rep = {});

/// Inverse of the reparametrization, z = c erfinv(2u/a - b); u is clamped
/// strictly inside the range first.
ScalarField<double> latent_from_image(const ScalarField<double>& u, const Reparam& rep = {});

}  // namespace tgpet
