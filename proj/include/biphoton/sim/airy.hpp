#pragma once

#include <random>
#include <vector>

namespace biphoton::sim {

/// Radial sampler for the Airy diffraction profile of a circular aperture of
/// diameter D at wavelength lambda and focal length f.
///
/// Uses the encircled-energy curve E(v) = 1 - J0(v)^2 - J1(v)^2 with
/// v = pi * D * r / (lambda * f), tabulated out to the 10th dark ring and
/// inverted by linear interpolation. The ~2% of energy beyond the 10th ring
/// is folded back by sampling u uniformly in [0, E(v_max)].
class AiryRadialSampler {
public:
    AiryRadialSampler(double aperture_diameter, double lambda, double focal_length);

    /// Draw a radial displacement (meters at the detector).
    double sample_radius(std::mt19937_64& rng) const;

    /// Radius of the first dark ring, 1.22 * lambda * f / D.
    double first_zero_radius() const { return first_zero_radius_; }

    /// Encircled energy at the end of the table (the truncation point).
    double table_energy_max() const { return e_max_; }

    /// Encircled energy at the first dark ring (about 0.838).
    static double encircled_energy_first_zero();

private:
    double v_to_radius_ = 0.0;   // r = v * lambda * f / (pi * D)
    double first_zero_radius_ = 0.0;
    double e_max_ = 0.0;
    std::vector<double> v_grid_;
    std::vector<double> energy_;  // E(v) on v_grid_, strictly increasing
};

} // namespace biphoton::sim
