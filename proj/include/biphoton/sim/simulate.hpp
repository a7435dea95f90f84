#pragma once

#include <cstdint>
#include <random>
#include <utility>
#include <vector>

#include "biphoton/core/types.hpp"
#include "biphoton/sim/config.hpp"

namespace biphoton::sim {

/// One biphoton pair in ideal detector coordinates (meters from the sensor
/// center, before pixelation).
struct PhotonPair {
    double x1, y1;
    double x2, y2;
};

struct Photon {
    double x, y;
};

/// Photons left after loss thinning, with pair bookkeeping.
struct LossResult {
    std::vector<Photon> photons;
    std::size_t intact_pairs = 0;      // both photons survived
    std::size_t single_survivors = 0;  // exactly one photon survived
};

/// Drift chain state: the AR(1) illumination factor of the previous frame.
struct DriftState {
    double s_prev = 1.0;
};

/// Draw ideal detector-plane pair positions for the requested plane.
///
/// ImagePlane: centroid ~ N(0, sigma_pump^2), separation ~ N(0, sigma_pair^2)
/// per axis; object positions c +/- d/2 are scaled by the image magnification.
/// PupilPlane: momentum sum ~ N(0, sigma_psum^2), single-photon momentum
/// ~ N(0, sigma_pdiff^2) per axis; momenta s/2 +/- q map to the detector
/// through the pupil calibration.
std::vector<PhotonPair> sample_pairs(const SourceConfig& source, core::Plane plane,
                                     const core::CalibrationConfig& cal, std::size_t n_pairs,
                                     std::mt19937_64& rng);

/// Displace every photon by an independent draw from the PSF intensity
/// profile (detector coordinates).
void apply_psf_blur(std::vector<PhotonPair>& pairs, const OpticsSimConfig& optics,
                    std::mt19937_64& rng);

/// Retain each photon independently with probability eta.
LossResult apply_loss(const std::vector<PhotonPair>& pairs, double eta, std::mt19937_64& rng);

/// Bin detected photons into an integer count grid after quantum-efficiency
/// thinning. Position u maps to pixel floor(u/pitch + 0.5) + width/2; photons
/// outside the sensor are dropped.
std::vector<double> accumulate_counts(const std::vector<Photon>& photons,
                                      const CameraConfig& camera, double pixel_pitch,
                                      std::mt19937_64& rng);

/// Advance the AR(1) illumination factor by one frame:
/// s_t = 1 + rho*(s_{t-1} - 1) + N(0, amplitude*sqrt(1 - rho^2)).
double advance_drift(const CameraConfig& camera, DriftState& state, std::mt19937_64& rng);

/// Static PRNU gain-deviation map drawn from (master_seed, PrnuMap).
std::vector<double> make_prnu_map(const CameraConfig& camera, std::uint64_t master_seed);

/// Turn a photon-count grid into a camera frame:
/// v = offset + gain*(1+prnu)*s_t*n, then v += alpha*v^2, then read noise,
/// then rounding to whole ADU (the ADC step).
core::Frame apply_camera(const std::vector<double>& counts, const CameraConfig& camera,
                         const std::vector<double>& prnu, double s_t, core::Plane plane,
                         std::mt19937_64& rng);

/// Synthesize a full stack. Deterministic in (configs, master_seed): the
/// drift chain is pre-generated sequentially, every frame then renders from
/// its own RNG substream, so the result is independent of `threads`.
std::pair<core::Stack, GroundTruth> simulate_stack(const SourceConfig& source,
                                                   const OpticsSimConfig& optics,
                                                   const CameraConfig& camera, int n_frames,
                                                   core::Plane plane, std::uint64_t master_seed,
                                                   int threads = 0);

} // namespace biphoton::sim
