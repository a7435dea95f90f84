#include "biphoton/sim/simulate.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>

#include "biphoton/core/errors.hpp"
#include "biphoton/core/geometry.hpp"
#include "biphoton/core/parallel.hpp"
#include "biphoton/sim/airy.hpp"
#include "biphoton/sim/rng.hpp"

namespace biphoton::sim {

using core::CalibrationConfig;
using core::Frame;
using core::Plane;
using core::Stack;
using core::ValidationError;

std::vector<PhotonPair> sample_pairs(const SourceConfig& source, Plane plane,
                                     const CalibrationConfig& cal, std::size_t n_pairs,
                                     std::mt19937_64& rng) {
    if (plane != Plane::Image && plane != Plane::Pupil)
        throw ValidationError("sample_pairs: unknown plane");
    std::vector<PhotonPair> pairs;
    pairs.reserve(n_pairs);
    if (plane == Plane::Image) {
        const double mag = core::image_magnification(cal);
        for (std::size_t i = 0; i < n_pairs; ++i) {
            const double cx = draw_normal(rng, 0.0, source.sigma_pump);
            const double cy = draw_normal(rng, 0.0, source.sigma_pump);
            const double dx = draw_normal(rng, 0.0, source.sigma_pair);
            const double dy = draw_normal(rng, 0.0, source.sigma_pair);
            pairs.push_back({(cx + 0.5 * dx) * mag, (cy + 0.5 * dy) * mag,
                             (cx - 0.5 * dx) * mag, (cy - 0.5 * dy) * mag});
        }
    } else {
        // detector meters per unit momentum (hbar/m)
        const double k = core::momentum_to_pupil_position(1.0, cal);
        for (std::size_t i = 0; i < n_pairs; ++i) {
            const double sx = draw_normal(rng, 0.0, source.sigma_psum);
            const double sy = draw_normal(rng, 0.0, source.sigma_psum);
            const double qx = draw_normal(rng, 0.0, source.sigma_pdiff);
            const double qy = draw_normal(rng, 0.0, source.sigma_pdiff);
            pairs.push_back({(0.5 * sx + qx) * k, (0.5 * sy + qy) * k,
                             (0.5 * sx - qx) * k, (0.5 * sy - qy) * k});
        }
    }
    return pairs;
}

void apply_psf_blur(std::vector<PhotonPair>& pairs, const OpticsSimConfig& optics,
                    std::mt19937_64& rng) {
    if (optics.psf.kind == PsfKind::GaussianOfSigma) {
        const double s = optics.psf.sigma;
        if (s == 0.0) return;
        for (PhotonPair& p : pairs) {
            p.x1 += draw_normal(rng, 0.0, s);
            p.y1 += draw_normal(rng, 0.0, s);
            p.x2 += draw_normal(rng, 0.0, s);
            p.y2 += draw_normal(rng, 0.0, s);
        }
        return;
    }
    if (!(optics.aperture_diameter > 0.0))
        throw ValidationError("apply_psf_blur: Airy PSF requires aperture_diameter > 0");
    const AiryRadialSampler airy(optics.aperture_diameter, optics.calibration.lambda,
                                 optics.calibration.f2);
    auto kick = [&](double& x, double& y) {
        const double r = airy.sample_radius(rng);
        const double phi = draw_uniform01(rng) * 2.0 * std::numbers::pi;
        x += r * std::cos(phi);
        y += r * std::sin(phi);
    };
    for (PhotonPair& p : pairs) {
        kick(p.x1, p.y1);
        kick(p.x2, p.y2);
    }
}

LossResult apply_loss(const std::vector<PhotonPair>& pairs, double eta, std::mt19937_64& rng) {
    if (!(eta >= 0.0 && eta <= 1.0))
        throw ValidationError("apply_loss: eta must be in [0,1]");
    LossResult out;
    out.photons.reserve(pairs.size() * 2);
    for (const PhotonPair& p : pairs) {
        const bool keep1 = eta >= 1.0 || draw_uniform01(rng) < eta;
        const bool keep2 = eta >= 1.0 || draw_uniform01(rng) < eta;
        if (keep1) out.photons.push_back({p.x1, p.y1});
        if (keep2) out.photons.push_back({p.x2, p.y2});
        if (keep1 && keep2)
            ++out.intact_pairs;
        else if (keep1 || keep2)
            ++out.single_survivors;
    }
    return out;
}

std::vector<double> accumulate_counts(const std::vector<Photon>& photons,
                                      const CameraConfig& camera, double pixel_pitch,
                                      std::mt19937_64& rng) {
    std::vector<double> grid(static_cast<std::size_t>(camera.width) * camera.height, 0.0);
    const int cx = camera.width / 2;
    const int cy = camera.height / 2;
    for (const Photon& ph : photons) {
        if (camera.qe < 1.0 && !(draw_uniform01(rng) < camera.qe)) continue;
        const int ix = static_cast<int>(std::floor(ph.x / pixel_pitch + 0.5)) + cx;
        const int iy = static_cast<int>(std::floor(ph.y / pixel_pitch + 0.5)) + cy;
        if (ix < 0 || ix >= camera.width || iy < 0 || iy >= camera.height) continue;
        grid[static_cast<std::size_t>(iy) * camera.width + ix] += 1.0;
    }
    return grid;
}

double advance_drift(const CameraConfig& camera, DriftState& state, std::mt19937_64& rng) {
    const double innovation_sigma =
        camera.drift_amplitude * std::sqrt(1.0 - camera.drift_rho * camera.drift_rho);
    const double s_t = 1.0 + camera.drift_rho * (state.s_prev - 1.0) +
                       draw_normal(rng, 0.0, innovation_sigma);
    state.s_prev = s_t;
    return s_t;
}

std::vector<double> make_prnu_map(const CameraConfig& camera, std::uint64_t master_seed) {
    std::vector<double> prnu(static_cast<std::size_t>(camera.width) * camera.height, 0.0);
    if (camera.prnu_amplitude == 0.0) return prnu;
    auto rng = make_stream(master_seed, RngDomain::PrnuMap);
    for (double& v : prnu) v = draw_normal(rng, 0.0, camera.prnu_amplitude);
    return prnu;
}

Frame apply_camera(const std::vector<double>& counts, const CameraConfig& camera,
                   const std::vector<double>& prnu, double s_t, Plane plane,
                   std::mt19937_64& rng) {
    const std::size_t n = static_cast<std::size_t>(camera.width) * camera.height;
    if (counts.size() != n || prnu.size() != n)
        throw ValidationError("apply_camera: grid size mismatch");
    Frame frame;
    frame.width = camera.width;
    frame.height = camera.height;
    frame.plane = plane;
    frame.values.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        double v = camera.offset + camera.gain * (1.0 + prnu[i]) * s_t * counts[i];
        v += camera.nonlinearity_alpha * v * v;
        v += draw_normal(rng, 0.0, camera.read_noise_sigma);
        frame.values[i] = std::round(v);  // ADC quantization to whole ADU
    }
    return frame;
}

std::pair<Stack, GroundTruth> simulate_stack(const SourceConfig& source,
                                             const OpticsSimConfig& optics,
                                             const CameraConfig& camera, int n_frames,
                                             Plane plane, std::uint64_t master_seed,
                                             int threads) {
    source.validate();
    optics.validate();
    camera.validate();
    if (n_frames < 1) throw ValidationError("simulate_stack: n_frames must be >= 1");
    if (static_cast<long long>(camera.width) * camera.height <= 0)
        throw ValidationError("simulate_stack: no illuminated pixels");

    // Sequential pre-generation of the drift chain keeps the per-frame
    // substreams independent of worker scheduling. The chain starts from its
    // stationary distribution.
    std::vector<double> drift(static_cast<std::size_t>(n_frames), 1.0);
    {
        auto rng = make_stream(master_seed, RngDomain::DriftChain);
        DriftState state;
        state.s_prev = 1.0 + draw_normal(rng, 0.0, camera.drift_amplitude);
        drift[0] = state.s_prev;
        for (int t = 1; t < n_frames; ++t) drift[t] = advance_drift(camera, state, rng);
    }

    const std::vector<double> prnu = make_prnu_map(camera, master_seed);
    const double pitch = optics.calibration.pixel_pitch;

    Stack stack;
    stack.pixel_pitch = pitch;
    stack.calibration = optics.calibration;
    stack.frames.resize(static_cast<std::size_t>(n_frames));

    core::parallel_for(0, static_cast<std::size_t>(n_frames), threads, [&](std::size_t t) {
        auto rng = make_stream(master_seed, RngDomain::Frame, t);
        const double s_t = drift[t];

        const double pair_mean = std::max(0.0, s_t * source.pairs_per_frame_mean);
        const auto n_pairs = static_cast<std::size_t>(draw_poisson(rng, pair_mean));
        auto pairs = sample_pairs(source, plane, optics.calibration, n_pairs, rng);
        apply_psf_blur(pairs, optics, rng);
        LossResult survivors = apply_loss(pairs, optics.transmission_eta, rng);

        // Uncorrelated stray background, uniform over the sensor.
        const double stray_mean = std::max(0.0, s_t * source.stray_photons_per_frame_mean);
        const auto n_stray = static_cast<std::size_t>(draw_poisson(rng, stray_mean));
        const double half_w = 0.5 * camera.width * pitch;
        const double half_h = 0.5 * camera.height * pitch;
        for (std::size_t i = 0; i < n_stray; ++i) {
            const double x = (draw_uniform01(rng) * 2.0 - 1.0) * half_w;
            const double y = (draw_uniform01(rng) * 2.0 - 1.0) * half_h;
            survivors.photons.push_back({x, y});
        }

        const auto counts = accumulate_counts(survivors.photons, camera, pitch, rng);
        stack.frames[t] = apply_camera(counts, camera, prnu, s_t, plane, rng);
    });

    GroundTruth gt = make_ground_truth(source, optics, camera, master_seed);
    stack.metadata["master_seed"] = std::to_string(master_seed);
    stack.metadata["plane"] = core::to_string(plane);
    stack.metadata["n_frames"] = std::to_string(n_frames);
    {
        char buf[64];
        std::snprintf(buf, sizeof(buf), "%.6g", source.epr_product_hbar());
        stack.metadata["source_epr_product_hbar"] = buf;
    }
    return {std::move(stack), gt};
}

} // namespace biphoton::sim
