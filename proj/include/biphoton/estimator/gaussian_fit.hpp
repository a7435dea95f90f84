#pragma once

#include <optional>
#include <vector>

#include "biphoton/core/types.hpp"

namespace biphoton::estimator {

/// Circular fit mask around the map center. exclude_center removes the
/// self-correlated zero-displacement cell (image-plane convention).
struct FitRegion {
    int diameter = 80;  // px
    bool exclude_center = true;

    void validate(const core::CorrelationMap& map) const;
};

/// Defaults matching the analysis convention per map kind: the central pixel
/// is excluded only for image-plane correlation maps.
FitRegion default_fit_region(core::MapKind kind, int diameter = 80);

struct MaskedCell {
    int dx, dy;    // displacement from the map center, px
    double value;  // map units
};

/// Cells whose centers lie within diameter/2 of the map center.
std::vector<MaskedCell> circular_mask(const core::CorrelationMap& map, const FitRegion& region);

/// Axis-aligned 2D Gaussian with constant offset,
/// model(dx, dy) = A * exp(-(dx-cx)^2/(2*sx^2) - (dy-cy)^2/(2*sy^2)) + b.
struct GaussianFit {
    double amplitude = 0.0;  // A, map units
    double center_x = 0.0;   // px relative to map center
    double center_y = 0.0;
    double sigma_x = 0.0;    // px
    double sigma_y = 0.0;
    double offset = 0.0;     // b, map units
    double residual_ssd = 0.0;
    bool converged = false;
    int iterations = 0;
};

/// Least-squares fit of the 6-parameter model by damped Gauss-Newton
/// (Levenberg-Marquardt schedule) with analytic derivatives.
///
/// Without `init`, starts from A = max - median, center = argmax cell
/// (ties: smallest row-major index), sigmas from second moments of the
/// positive part, b = median. Stops when the relative SSD decrease drops
/// below 1e-10 or after 200 iterations.
GaussianFit fit_gaussian2d(const std::vector<MaskedCell>& cells,
                           const std::optional<GaussianFit>& init = std::nullopt);

struct PeakStats {
    double amplitude = 0.0;
    double volume = 0.0;  // 2*pi*A*sx*sy
    double fwhm_x = 0.0;  // 2*sqrt(2 ln 2)*sx
    double fwhm_y = 0.0;
};

/// Closed-form peak descriptors; rejects unconverged fits.
PeakStats peak_statistics(const GaussianFit& fit);

} // namespace biphoton::estimator
