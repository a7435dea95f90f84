#include "biphoton/estimator/gaussian_fit.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include "biphoton/core/errors.hpp"

namespace biphoton::estimator {

using core::NumericalError;
using core::ValidationError;

void FitRegion::validate(const core::CorrelationMap& map) const {
    if (diameter < 5) throw ValidationError("FitRegion: diameter must be >= 5 px");
    if (diameter > map.size)
        throw ValidationError("FitRegion: mask does not fit inside the map crop");
}

FitRegion default_fit_region(core::MapKind kind, int diameter) {
    FitRegion region;
    region.diameter = diameter;
    region.exclude_center = kind == core::MapKind::Autocorrelation;
    return region;
}

std::vector<MaskedCell> circular_mask(const core::CorrelationMap& map, const FitRegion& region) {
    map.validate();
    if (region.diameter < 1) throw ValidationError("circular_mask: diameter must be >= 1");
    if (region.diameter > map.size)
        throw ValidationError("circular_mask: region larger than map");
    const double r2 = 0.25 * static_cast<double>(region.diameter) * region.diameter;
    const int half = map.center();
    std::vector<MaskedCell> cells;
    for (int dy = -half; dy <= half; ++dy) {
        for (int dx = -half; dx <= half; ++dx) {
            if (static_cast<double>(dx) * dx + static_cast<double>(dy) * dy > r2) continue;
            if (region.exclude_center && dx == 0 && dy == 0) continue;
            cells.push_back({dx, dy, map.at(dx, dy)});
        }
    }
    return cells;
}

namespace {

constexpr int kParamCount = 6;
constexpr int kMaxIterations = 200;
constexpr double kRelativeSsdTolerance = 1e-10;

using Params = std::array<double, kParamCount>;  // A, cx, cy, sx, sy, b

double model_ssd(const std::vector<MaskedCell>& cells, const Params& p) {
    const auto [a, cx, cy, sx, sy, b] = p;
    double ssd = 0.0;
    for (const MaskedCell& c : cells) {
        const double ux = (c.dx - cx) / sx;
        const double uy = (c.dy - cy) / sy;
        const double m = a * std::exp(-0.5 * (ux * ux + uy * uy)) + b;
        const double r = c.value - m;
        ssd += r * r;
    }
    return ssd;
}

/// Solve (M + lambda*diag(M)) x = g for the 6x6 normal equations by
/// Gaussian elimination with partial pivoting. Returns false if singular.
bool solve_damped(std::array<double, kParamCount * kParamCount> m,
                  std::array<double, kParamCount> g, double lambda, Params& step) {
    for (int i = 0; i < kParamCount; ++i) m[i * kParamCount + i] *= 1.0 + lambda;
    for (int col = 0; col < kParamCount; ++col) {
        int pivot = col;
        for (int r = col + 1; r < kParamCount; ++r)
            if (std::fabs(m[r * kParamCount + col]) > std::fabs(m[pivot * kParamCount + col]))
                pivot = r;
        if (std::fabs(m[pivot * kParamCount + col]) < 1e-300) return false;
        if (pivot != col) {
            for (int c = 0; c < kParamCount; ++c)
                std::swap(m[pivot * kParamCount + c], m[col * kParamCount + c]);
            std::swap(g[pivot], g[col]);
        }
        const double inv = 1.0 / m[col * kParamCount + col];
        for (int r = col + 1; r < kParamCount; ++r) {
            const double f = m[r * kParamCount + col] * inv;
            if (f == 0.0) continue;
            for (int c = col; c < kParamCount; ++c) m[r * kParamCount + c] -= f * m[col * kParamCount + c];
            g[r] -= f * g[col];
        }
    }
    for (int row = kParamCount - 1; row >= 0; --row) {
        double v = g[row];
        for (int c = row + 1; c < kParamCount; ++c) v -= m[row * kParamCount + c] * step[c];
        step[row] = v / m[row * kParamCount + row];
    }
    return true;
}

Params initial_guess(const std::vector<MaskedCell>& cells) {
    std::vector<double> sorted;
    sorted.reserve(cells.size());
    for (const MaskedCell& c : cells) sorted.push_back(c.value);
    std::sort(sorted.begin(), sorted.end());
    const std::size_t n = sorted.size();
    const double median =
        n % 2 == 1 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
    const double max_value = sorted.back();

    // argmax with smallest row-major (dy, dx) index on ties; cells are
    // generated in row-major order already.
    std::size_t argmax = 0;
    for (std::size_t i = 1; i < cells.size(); ++i)
        if (cells[i].value > cells[argmax].value) argmax = i;

    // Second moments of the positive part about the argmax cell.
    double wsum = 0.0, mx = 0.0, my = 0.0;
    for (const MaskedCell& c : cells) {
        const double w = std::max(c.value - median, 0.0);
        wsum += w;
        const double ddx = c.dx - cells[argmax].dx;
        const double ddy = c.dy - cells[argmax].dy;
        mx += w * ddx * ddx;
        my += w * ddy * ddy;
    }
    double sx = wsum > 0.0 ? std::sqrt(mx / wsum) : 1.0;
    double sy = wsum > 0.0 ? std::sqrt(my / wsum) : 1.0;
    sx = std::max(sx, 0.5);
    sy = std::max(sy, 0.5);
    return {max_value - median, static_cast<double>(cells[argmax].dx),
            static_cast<double>(cells[argmax].dy), sx, sy, median};
}

} // namespace

GaussianFit fit_gaussian2d(const std::vector<MaskedCell>& cells,
                           const std::optional<GaussianFit>& init) {
    if (cells.size() < kParamCount + 1)
        throw ValidationError("fit_gaussian2d: need at least 7 cells");

    GaussianFit out;

    Params p;
    if (init) {
        p = {init->amplitude, init->center_x, init->center_y,
             std::max(init->sigma_x, 1e-6), std::max(init->sigma_y, 1e-6), init->offset};
    } else {
        p = initial_guess(cells);
    }

    // Degenerate flat input: nothing to fit.
    const auto [min_it, max_it] =
        std::minmax_element(cells.begin(), cells.end(),
                            [](const MaskedCell& a, const MaskedCell& b) { return a.value < b.value; });
    if (max_it->value == min_it->value) {
        out.amplitude = 0.0;
        out.offset = max_it->value;
        out.sigma_x = out.sigma_y = 1.0;
        out.converged = false;
        out.residual_ssd = 0.0;
        return out;
    }

    double ssd = model_ssd(cells, p);
    double lambda = 1e-3;
    int iterations = 0;

    // Terminates on a sub-tolerance relative SSD decrease, on a step the
    // damping cannot improve, or at the iteration cap; all three exits leave
    // a usable minimum, so `converged` only goes false on numerical failure.
    for (int iter = 0; iter < kMaxIterations; ++iter) {
        iterations = iter + 1;
        const auto [a, cx, cy, sx, sy, b] = p;

        std::array<double, kParamCount * kParamCount> jtj{};
        std::array<double, kParamCount> jtr{};
        for (const MaskedCell& c : cells) {
            const double ddx = c.dx - cx;
            const double ddy = c.dy - cy;
            const double ux = ddx / sx;
            const double uy = ddy / sy;
            const double e = std::exp(-0.5 * (ux * ux + uy * uy));
            const double m = a * e + b;
            const double r = c.value - m;
            const std::array<double, kParamCount> j = {
                e,
                a * e * ddx / (sx * sx),
                a * e * ddy / (sy * sy),
                a * e * ddx * ddx / (sx * sx * sx),
                a * e * ddy * ddy / (sy * sy * sy),
                1.0,
            };
            for (int row = 0; row < kParamCount; ++row) {
                jtr[row] += j[row] * r;
                for (int col = row; col < kParamCount; ++col)
                    jtj[row * kParamCount + col] += j[row] * j[col];
            }
        }
        for (int row = 1; row < kParamCount; ++row)
            for (int col = 0; col < row; ++col)
                jtj[row * kParamCount + col] = jtj[col * kParamCount + row];

        if (ssd == 0.0) break;  // exact fit already

        bool accepted = false;
        double rel_decrease = 0.0;
        for (int attempt = 0; attempt < 40; ++attempt) {
            Params step{};
            if (!solve_damped(jtj, jtr, lambda, step)) {
                lambda *= 3.0;
                continue;
            }
            Params trial = p;
            for (int i = 0; i < kParamCount; ++i) trial[i] += step[i];
            if (!(trial[3] > 0.0) || !(trial[4] > 0.0)) {
                lambda *= 3.0;
                continue;
            }
            const double trial_ssd = model_ssd(cells, trial);
            if (std::isfinite(trial_ssd) && trial_ssd <= ssd) {
                rel_decrease = (ssd - trial_ssd) / ssd;
                p = trial;
                ssd = trial_ssd;
                lambda = std::max(lambda * 0.3, 1e-12);
                accepted = true;
                break;
            }
            lambda *= 3.0;
        }
        if (!accepted) break;  // damping exhausted: already at a minimum
        if (rel_decrease < kRelativeSsdTolerance) break;
    }

    out.amplitude = p[0];
    out.center_x = p[1];
    out.center_y = p[2];
    out.sigma_x = std::fabs(p[3]);
    out.sigma_y = std::fabs(p[4]);
    out.offset = p[5];
    out.residual_ssd = ssd;
    out.converged = std::isfinite(ssd) && std::isfinite(p[0]) && std::isfinite(p[1]) &&
                    std::isfinite(p[2]) && p[3] > 0.0 && p[4] > 0.0 && std::isfinite(p[5]);
    out.iterations = iterations;
    return out;
}

PeakStats peak_statistics(const GaussianFit& fit) {
    if (!fit.converged) throw NumericalError("peak_statistics: fit did not converge");
    PeakStats stats;
    stats.amplitude = fit.amplitude;
    stats.volume = 2.0 * std::numbers::pi * fit.amplitude * fit.sigma_x * fit.sigma_y;
    const double fwhm = 2.0 * std::sqrt(2.0 * std::numbers::ln2);
    stats.fwhm_x = fwhm * fit.sigma_x;
    stats.fwhm_y = fwhm * fit.sigma_y;
    return stats;
}

} // namespace biphoton::estimator
