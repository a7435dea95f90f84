#pragma once

#include "biphoton/core/types.hpp"
#include "biphoton/estimator/gaussian_fit.hpp"

namespace biphoton::estimator {

enum class Axis { X, Y };

/// Evaluate the inference-variance product for given widths: dx in object
/// plane meters, dp in hbar/m. product = (dx*dp)^2 in hbar^2 units;
/// violation means product < 1/4.
core::EprResult epr_from_widths(double delta_x_m, double delta_p_hbar_per_m);

/// Reid-criterion evaluation from the two fitted peak widths along one axis.
/// The fitted sigmas (pixels) are taken directly as the inference widths:
/// dx = displacement_to_object(sigma_image), dp = pupil_position_to_momentum
/// (sigma_pupil * pixel_pitch). Rejects unconverged fits.
core::EprResult epr_witness(const GaussianFit& fit_image, const GaussianFit& fit_pupil,
                            const core::CalibrationConfig& cal, Axis axis = Axis::X);

struct ControlRatios {
    double amplitude_ratio = 0.0;  // control / main
    double volume_ratio = 0.0;
};

/// control/main ratios of fitted amplitude and integrated peak volume.
ControlRatios compare_control(const GaussianFit& main_fit, const GaussianFit& control_fit);

} // namespace biphoton::estimator
