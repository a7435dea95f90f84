#include "biphoton/estimator/witness.hpp"

#include "biphoton/core/errors.hpp"
#include "biphoton/core/geometry.hpp"

namespace biphoton::estimator {

using core::EprResult;
using core::NumericalError;

EprResult epr_from_widths(double delta_x_m, double delta_p_hbar_per_m) {
    EprResult r;
    r.delta_x2 = delta_x_m * delta_x_m;
    r.delta_p2 = delta_p_hbar_per_m * delta_p_hbar_per_m;
    const double product = delta_x_m * delta_p_hbar_per_m;
    r.product_hbar2 = product * product;
    r.bound = 0.25;
    r.violated = r.product_hbar2 < r.bound;
    r.violation_factor = r.bound / r.product_hbar2;
    return r;
}

EprResult epr_witness(const GaussianFit& fit_image, const GaussianFit& fit_pupil,
                      const core::CalibrationConfig& cal, Axis axis) {
    if (!fit_image.converged || !fit_pupil.converged)
        throw NumericalError("epr_witness: fits must be converged");
    const double sigma_image_px = axis == Axis::X ? fit_image.sigma_x : fit_image.sigma_y;
    const double sigma_pupil_px = axis == Axis::X ? fit_pupil.sigma_x : fit_pupil.sigma_y;
    const double dx = core::displacement_to_object(sigma_image_px, cal);
    const double dp = core::pupil_position_to_momentum(sigma_pupil_px * cal.pixel_pitch, cal);
    return epr_from_widths(dx, dp);
}

ControlRatios compare_control(const GaussianFit& main_fit, const GaussianFit& control_fit) {
    if (!main_fit.converged || !control_fit.converged)
        throw NumericalError("compare_control: fits must be converged");
    ControlRatios r;
    r.amplitude_ratio = control_fit.amplitude / main_fit.amplitude;
    const PeakStats main_stats = peak_statistics(main_fit);
    const PeakStats control_stats = peak_statistics(control_fit);
    r.volume_ratio = control_stats.volume / main_stats.volume;
    return r;
}

} // namespace biphoton::estimator
