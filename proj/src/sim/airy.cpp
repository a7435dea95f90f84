#include "biphoton/sim/airy.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "biphoton/core/errors.hpp"
#include "biphoton/sim/rng.hpp"

namespace biphoton::sim {

namespace {

// 10th zero of J1; v argument of the encircled-energy table endpoint.
constexpr double kTenthRingV = 32.189679910974405;
constexpr int kTableSize = 4096;

double encircled_energy(double v) {
    if (v <= 0.0) return 0.0;
    const double j0 = std::cyl_bessel_j(0.0, v);
    const double j1 = std::cyl_bessel_j(1.0, v);
    return 1.0 - j0 * j0 - j1 * j1;
}

} // namespace

AiryRadialSampler::AiryRadialSampler(double aperture_diameter, double lambda,
                                     double focal_length) {
    if (!(aperture_diameter > 0.0))
        throw core::ValidationError("AiryRadialSampler: aperture diameter must be > 0");
    if (!(lambda > 0.0) || !(focal_length > 0.0))
        throw core::ValidationError("AiryRadialSampler: lambda and focal length must be > 0");

    v_to_radius_ = lambda * focal_length / (std::numbers::pi * aperture_diameter);
    first_zero_radius_ = 1.22 * lambda * focal_length / aperture_diameter;

    v_grid_.resize(kTableSize);
    energy_.resize(kTableSize);
    for (int i = 0; i < kTableSize; ++i) {
        const double v = kTenthRingV * static_cast<double>(i) / (kTableSize - 1);
        v_grid_[i] = v;
        energy_[i] = encircled_energy(v);
    }
    // E(v) is monotone except for flat spots at the dark rings; enforce
    // non-decreasing values so inversion is well defined.
    for (int i = 1; i < kTableSize; ++i)
        energy_[i] = std::max(energy_[i], energy_[i - 1]);
    e_max_ = energy_.back();
}

double AiryRadialSampler::sample_radius(std::mt19937_64& rng) const {
    const double u = draw_uniform01(rng) * e_max_;
    auto it = std::lower_bound(energy_.begin(), energy_.end(), u);
    if (it == energy_.begin()) return 0.0;
    const std::size_t hi = static_cast<std::size_t>(it - energy_.begin());
    const std::size_t lo = hi - 1;
    const double de = energy_[hi] - energy_[lo];
    const double t = de > 0.0 ? (u - energy_[lo]) / de : 0.0;
    const double v = v_grid_[lo] + t * (v_grid_[hi] - v_grid_[lo]);
    return v * v_to_radius_;
}

double AiryRadialSampler::encircled_energy_first_zero() {
    return encircled_energy(3.831705970207512);
}

} // namespace biphoton::sim
