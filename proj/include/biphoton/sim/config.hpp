#pragma once

#include <cmath>
#include <cstdint>
#include <string>

#include "biphoton/core/errors.hpp"
#include "biphoton/core/geometry.hpp"
#include "biphoton/core/types.hpp"

namespace biphoton::sim {

/// Phenomenological double-Gaussian pair source, all spreads per transverse
/// axis. Position scales are object-plane meters, momentum scales hbar/m.
struct SourceConfig {
    double sigma_pump = 150e-6;          // pair-centroid spread (pump beam scale)
    double sigma_pair = 5e-6;            // pair-separation spread (position correlation width)
    double sigma_psum = 6394.0;          // momentum-sum spread (anticorrelation width)
    double sigma_pdiff = 5.0e4;          // single-photon momentum spread
    double pairs_per_frame_mean = 1e5;
    double stray_photons_per_frame_mean = 0.0;

    /// sigma_pair * sigma_psum in units of hbar; below 0.5 the source can
    /// violate the witness. Reported, not enforced.
    double epr_product_hbar() const { return sigma_pair * sigma_psum; }

    void validate() const {
        auto nonneg = [](double v, const char* name) {
            if (!(v >= 0.0) || !std::isfinite(v))
                throw core::ValidationError(std::string("SourceConfig: ") + name +
                                            " must be finite and >= 0");
        };
        nonneg(sigma_pump, "sigma_pump");
        nonneg(sigma_pair, "sigma_pair");
        nonneg(sigma_psum, "sigma_psum");
        nonneg(sigma_pdiff, "sigma_pdiff");
        nonneg(pairs_per_frame_mean, "pairs_per_frame_mean");
        nonneg(stray_photons_per_frame_mean, "stray_photons_per_frame_mean");
    }
};

enum class PsfKind : std::uint8_t { GaussianOfSigma = 0, AiryFromAperture = 1 };

struct PsfModel {
    PsfKind kind = PsfKind::GaussianOfSigma;
    double sigma = 0.0;  // m at the detector plane, Gaussian model only
};

struct OpticsSimConfig {
    double aperture_diameter = 12e-3;  // m, iris opening
    PsfModel psf;
    double transmission_eta = 1.0;  // downstream loss (ND filter + optics)
    core::CalibrationConfig calibration;

    void validate() const {
        calibration.validate();
        if (!(aperture_diameter > 0.0))
            throw core::ValidationError("OpticsSimConfig: aperture_diameter must be > 0");
        if (!(transmission_eta >= 0.0 && transmission_eta <= 1.0))
            throw core::ValidationError("OpticsSimConfig: transmission_eta must be in [0,1]");
        if (psf.kind == PsfKind::GaussianOfSigma && !(psf.sigma >= 0.0))
            throw core::ValidationError("OpticsSimConfig: psf sigma must be >= 0");
    }
};

/// sCMOS-style camera model. PRNU is a static per-pixel gain map drawn once
/// from the master seed; drift is an AR(1) illumination factor shared by pair
/// generation and gain.
struct CameraConfig {
    int width = 128;
    int height = 128;
    double qe = 0.9;
    double gain = 1.0;              // ADU per detected photon
    double read_noise_sigma = 2.0;  // ADU
    double offset = 100.0;          // ADU
    double prnu_amplitude = 0.0;    // relative per-pixel gain dispersion
    double nonlinearity_alpha = 0.0;  // 1/ADU, v -> v + alpha*v^2
    double drift_rho = 0.0;           // AR(1) frame-to-frame correlation
    double drift_amplitude = 0.0;     // relative illumination fluctuation scale

    void validate() const {
        if (width < 2 || height < 2)
            throw core::ValidationError("CameraConfig: width and height must be >= 2");
        if (!(qe >= 0.0 && qe <= 1.0))
            throw core::ValidationError("CameraConfig: qe must be in [0,1]");
        if (!(read_noise_sigma >= 0.0))
            throw core::ValidationError("CameraConfig: read_noise_sigma must be >= 0");
        if (!(drift_rho >= 0.0 && drift_rho < 1.0))
            throw core::ValidationError("CameraConfig: drift_rho must be in [0,1)");
        if (!(drift_amplitude >= 0.0))
            throw core::ValidationError("CameraConfig: drift_amplitude must be >= 0");
        if (!(gain > 0.0))
            throw core::ValidationError("CameraConfig: gain must be > 0");
        if (!std::isfinite(offset) || !std::isfinite(nonlinearity_alpha) ||
            !std::isfinite(prnu_amplitude))
            throw core::ValidationError("CameraConfig: non-finite parameter");
    }
};

/// Everything the tests need to predict what a simulated stack should show.
struct GroundTruth {
    SourceConfig source;
    OpticsSimConfig optics;
    CameraConfig camera;
    std::uint64_t master_seed = 0;
    /// Object-plane sigma of the image-plane correlation peak. For the
    /// Gaussian PSF this is sqrt(sigma_pair^2 + 2*(sigma_psf/M)^2); for the
    /// Airy PSF the blur has no finite second moment and the source value
    /// sigma_pair is recorded instead.
    double expected_peak_sigma_image = 0.0;  // m
    /// Momentum-units sigma of the pupil-plane anticorrelation peak,
    /// sqrt(sigma_psum^2 + 2*(sigma_psf/k)^2) with k the momentum->detector
    /// scale (Gaussian PSF; same Airy caveat as above).
    double expected_peak_sigma_pupil = 0.0;  // hbar/m
    /// Pairs per frame with both photons transmitted and detected,
    /// pairs_per_frame_mean * (eta*qe)^2; sensor-edge losses excluded.
    double expected_pair_detection_rate = 0.0;
};

inline GroundTruth make_ground_truth(const SourceConfig& source, const OpticsSimConfig& optics,
                                     const CameraConfig& camera, std::uint64_t master_seed) {
    GroundTruth gt;
    gt.source = source;
    gt.optics = optics;
    gt.camera = camera;
    gt.master_seed = master_seed;
    const double mag = core::image_magnification(optics.calibration);
    if (optics.psf.kind == PsfKind::GaussianOfSigma) {
        const double psf_obj = optics.psf.sigma / mag;
        gt.expected_peak_sigma_image =
            std::sqrt(source.sigma_pair * source.sigma_pair + 2.0 * psf_obj * psf_obj);
        // detector meters per (hbar/m) in the pupil configuration
        const double k = core::momentum_to_pupil_position(1.0, optics.calibration);
        const double psf_p = optics.psf.sigma / k;
        gt.expected_peak_sigma_pupil =
            std::sqrt(source.sigma_psum * source.sigma_psum + 2.0 * psf_p * psf_p);
    } else {
        gt.expected_peak_sigma_image = source.sigma_pair;
        gt.expected_peak_sigma_pupil = source.sigma_psum;
    }
    const double p = optics.transmission_eta * camera.qe;
    gt.expected_pair_detection_rate = source.pairs_per_frame_mean * p * p;
    return gt;
}

} // namespace biphoton::sim
