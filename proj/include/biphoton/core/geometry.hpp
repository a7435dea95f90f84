#pragma once

#include <numbers>

#include "biphoton/core/types.hpp"

namespace biphoton::core {

/// Transverse magnification of the infinite-conjugate image relay (f2/f1).
inline double image_magnification(const CalibrationConfig& cal) {
    return cal.f2 / cal.f1;
}

/// Convert a correlation-map displacement at the detector (in pixels) to a
/// crystal/object-plane distance in meters.
inline double displacement_to_object(double delta_px, const CalibrationConfig& cal) {
    return delta_px * cal.pixel_pitch * cal.f1 / cal.f2;
}

/// Map a detector-plane position in the pupil configuration to transverse
/// momentum in units of hbar per meter:  p = 2*pi * u_iris / (lambda * f1)
/// with u_iris = u_det / pupil_relay_magnification.
inline double pupil_position_to_momentum(double u_det_m, const CalibrationConfig& cal) {
    const double u_iris = u_det_m / cal.pupil_relay_magnification;
    return 2.0 * std::numbers::pi * u_iris / (cal.lambda * cal.f1);
}

/// Inverse of pupil_position_to_momentum: detector position for a momentum.
inline double momentum_to_pupil_position(double p_hbar_per_m, const CalibrationConfig& cal) {
    return p_hbar_per_m * cal.lambda * cal.f1 * cal.pupil_relay_magnification /
           (2.0 * std::numbers::pi);
}

} // namespace biphoton::core
