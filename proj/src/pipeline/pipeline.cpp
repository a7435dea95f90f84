#include "biphoton/pipeline/pipeline.hpp"

#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <cmath>
#include <sstream>

#include "biphoton/core/errors.hpp"
#include "biphoton/core/geometry.hpp"
#include "biphoton/corr/correlator.hpp"
#include "biphoton/estimator/witness.hpp"
#include "biphoton/io/heatmap.hpp"
#include "biphoton/io/stack_io.hpp"
#include "biphoton/sim/rng.hpp"
#include "biphoton/sim/simulate.hpp"

namespace biphoton::pipeline {

using core::CorrelationMap;
using core::Plane;
using core::Stack;
using estimator::GaussianFit;
using io::ExperimentConfig;

namespace {

template <typename Fn>
auto stage(const char* name, Fn&& fn) {
    try {
        return fn();
    } catch (const core::ValidationError& e) {
        throw core::ValidationError(std::string(name) + ": " + e.what());
    } catch (const core::IoError& e) {
        throw core::IoError(std::string(name) + ": " + e.what());
    } catch (const core::NumericalError& e) {
        throw core::NumericalError(std::string(name) + ": " + e.what());
    }
}

corr::CorrelationJob job_for(const ExperimentConfig& config, Plane plane) {
    corr::CorrelationJob job;
    job.mode = plane == Plane::Image ? corr::CorrelationJob::Mode::ImageCorrelation
                                     : corr::CorrelationJob::Mode::PupilConvolution;
    job.background_lag = config.background_lag_for(plane);
    job.crop_size = config.correlation.crop_size;
    return job;
}

GaussianFit fit_map(const ExperimentConfig& config, const CorrelationMap& map, Plane plane) {
    const estimator::FitRegion& region = config.fit_region_for(plane);
    region.validate(map);
    const auto cells = estimator::circular_mask(map, region);
    GaussianFit fit = estimator::fit_gaussian2d(cells);
    if (!fit.converged)
        throw core::NumericalError(std::string("gaussian fit did not converge (") +
                                   core::to_string(plane) + " plane)");
    return fit;
}

std::string iso_timestamp() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    char buf[32];
    std::tm tm_utc{};
    gmtime_r(&t, &tm_utc);
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
    return buf;
}

} // namespace

PlaneRun acquire_stack(const ExperimentConfig& config, Plane plane, std::uint64_t master_seed,
                       int threads) {
    const auto& path =
        plane == Plane::Image ? config.stacks.image_path : config.stacks.pupil_path;
    if (path) {
        auto loaded = io::read_stack(*path);
        loaded.stack.calibration = config.calibration;
        if (loaded.stack.plane() != plane)
            throw core::ValidationError("stack file " + path->string() + " holds " +
                                        core::to_string(loaded.stack.plane()) +
                                        "-plane frames, expected " + core::to_string(plane));
        return {std::move(loaded.stack), std::nullopt};
    }
    auto [stack, gt] = sim::simulate_stack(config.source, config.optics, config.camera,
                                           config.n_frames, plane, master_seed, threads);
    return {std::move(stack), gt};
}

ExperimentConfig control_variant(const ExperimentConfig& config) {
    if (!config.control)
        throw core::ValidationError("control_variant: config has no control block");
    ExperimentConfig c = config;
    const double eta = config.control->transmission_eta;
    c.optics.transmission_eta = config.optics.transmission_eta * eta;
    if (config.control->compensate_pump)
        c.source.pairs_per_frame_mean = config.source.pairs_per_frame_mean / eta;
    c.stacks = {};  // control runs are always simulated
    c.control.reset();
    return c;
}

std::uint64_t control_seed(std::uint64_t master_seed) {
    return sim::splitmix64(master_seed ^ 0xC0117201ULL);
}

io::WitnessReport run_pipeline(const ExperimentConfig& config,
                               const std::filesystem::path& out_dir, int threads) {
    config.validate();
    std::filesystem::create_directories(out_dir);

    PlaneRun image = stage("simulate-image", [&] {
        return acquire_stack(config, Plane::Image, config.master_seed, threads);
    });
    PlaneRun pupil = stage("simulate-pupil", [&] {
        return acquire_stack(config, Plane::Pupil, config.master_seed, threads);
    });

    const CorrelationMap image_map = stage("correlate-image", [&] {
        return corr::accumulate(image.stack, job_for(config, Plane::Image), threads).map;
    });
    const CorrelationMap pupil_map = stage("correlate-pupil", [&] {
        return corr::accumulate(pupil.stack, job_for(config, Plane::Pupil), threads).map;
    });

    io::WitnessReport report;
    report.fit_image =
        stage("fit-image", [&] { return fit_map(config, image_map, Plane::Image); });
    report.fit_pupil =
        stage("fit-pupil", [&] { return fit_map(config, pupil_map, Plane::Pupil); });

    stage("witness", [&] {
        report.epr_x = estimator::epr_witness(report.fit_image, report.fit_pupil,
                                              config.calibration, estimator::Axis::X);
        report.epr_y = estimator::epr_witness(report.fit_image, report.fit_pupil,
                                              config.calibration, estimator::Axis::Y);
        report.stats_image = estimator::peak_statistics(report.fit_image);
        report.stats_pupil = estimator::peak_statistics(report.fit_pupil);
        report.delta_x_detector_m = report.fit_image.sigma_x * config.calibration.pixel_pitch;
        report.delta_x_object_m =
            core::displacement_to_object(report.fit_image.sigma_x, config.calibration);
        report.delta_p_hbar_per_m = core::pupil_position_to_momentum(
            report.fit_pupil.sigma_x * config.calibration.pixel_pitch, config.calibration);
        return 0;
    });

    std::optional<CorrelationMap> control_image_map;
    std::optional<CorrelationMap> control_pupil_map;
    if (config.control) {
        const ExperimentConfig cc = control_variant(config);
        const std::uint64_t seed = control_seed(config.master_seed);
        stage("control", [&] {
            PlaneRun cimage = acquire_stack(cc, Plane::Image, seed, threads);
            control_image_map =
                corr::accumulate(cimage.stack, job_for(cc, Plane::Image), threads).map;
            const GaussianFit cfit = fit_map(cc, *control_image_map, Plane::Image);
            report.control_image = estimator::compare_control(report.fit_image, cfit);

            PlaneRun cpupil = acquire_stack(cc, Plane::Pupil, seed, threads);
            control_pupil_map =
                corr::accumulate(cpupil.stack, job_for(cc, Plane::Pupil), threads).map;
            const GaussianFit pfit = fit_map(cc, *control_pupil_map, Plane::Pupil);
            report.control_pupil = estimator::compare_control(report.fit_pupil, pfit);
            return 0;
        });
    }

    stage("render", [&] {
        if (control_image_map) {
            const double m = io::shared_max({&image_map, &*control_image_map});
            io::render_heatmap_pgm(image_map, out_dir / "image_map.pgm", m);
            io::render_heatmap_pgm(*control_image_map, out_dir / "image_control_map.pgm", m);
        } else {
            io::render_heatmap_pgm(image_map, out_dir / "image_map.pgm");
        }
        if (control_pupil_map) {
            const double m = io::shared_max({&pupil_map, &*control_pupil_map});
            io::render_heatmap_pgm(pupil_map, out_dir / "pupil_map.pgm", m);
            io::render_heatmap_pgm(*control_pupil_map, out_dir / "pupil_control_map.pgm", m);
        } else {
            io::render_heatmap_pgm(pupil_map, out_dir / "pupil_map.pgm");
        }
        return 0;
    });

    report.config = config;
    report.config_hash = io::config_hash(config);
    report.master_seed = config.master_seed;
    report.frames_image = static_cast<long>(image.stack.size());
    report.frames_pupil = static_cast<long>(pupil.stack.size());
    report.timestamp = iso_timestamp();

    stage("write-report", [&] {
        io::write_map(image_map, out_dir / "image_map.json");
        io::write_map(pupil_map, out_dir / "pupil_map.json");
        io::write_report(report, out_dir / "report.json");
        return 0;
    });
    return report;
}

std::string SweepTable::to_csv() const {
    std::ostringstream out;
    out << "aperture_diameter_m,sigma_x_px,sigma_y_px,sigma_x_object_m,amplitude,volume,"
           "converged,error\n";
    out.precision(12);
    for (const SweepRow& r : rows) {
        out << r.aperture_diameter_m << "," << r.sigma_x_px << "," << r.sigma_y_px << ","
            << r.sigma_x_object_m << "," << r.amplitude << "," << r.volume << ","
            << (r.converged ? "true" : "false") << "," << r.error << "\n";
    }
    return out.str();
}

SweepTable run_sweep(const ExperimentConfig& config,
                     const std::vector<double>& aperture_diameters_m,
                     const std::filesystem::path& out_dir, int threads) {
    config.validate();
    if (aperture_diameters_m.size() < 2)
        throw core::ValidationError("run_sweep: need at least 2 apertures");
    std::filesystem::create_directories(out_dir);

    SweepTable table;
    const double ref_d = config.optics.aperture_diameter;
    const double ref_sigma = config.optics.psf.sigma;

    for (std::size_t i = 0; i < aperture_diameters_m.size(); ++i) {
        const double d = aperture_diameters_m[i];
        SweepRow row;
        row.aperture_diameter_m = d;
        try {
            if (!(d > 0.0)) throw core::ValidationError("aperture diameter must be > 0");
            ExperimentConfig c = config;
            c.optics.aperture_diameter = d;
            if (c.optics.psf.kind == sim::PsfKind::GaussianOfSigma)
                c.optics.psf.sigma = ref_sigma * ref_d / d;  // blur scales as 1/D
            const std::uint64_t seed = sim::splitmix64(config.master_seed ^ (0xA9E17u + i));
            auto [stack, gt] = sim::simulate_stack(c.source, c.optics, c.camera, c.n_frames,
                                                   Plane::Image, seed, threads);
            const auto result = corr::accumulate(stack, job_for(c, Plane::Image), threads);
            const GaussianFit fit = fit_map(c, result.map, Plane::Image);
            const auto stats = estimator::peak_statistics(fit);
            row.sigma_x_px = fit.sigma_x;
            row.sigma_y_px = fit.sigma_y;
            row.sigma_x_object_m =
                core::displacement_to_object(fit.sigma_x, config.calibration);
            row.amplitude = fit.amplitude;
            row.volume = stats.volume;
            row.converged = fit.converged;

            char name[64];
            std::snprintf(name, sizeof(name), "sweep_map_%02zu.pgm", i);
            io::render_heatmap_pgm(result.map, out_dir / name);
        } catch (const std::exception& e) {
            row.error = e.what();
        }
        table.rows.push_back(row);
    }

    std::ofstream csv(out_dir / "sweep.csv", std::ios::trunc);
    if (!csv) throw core::IoError("run_sweep: cannot create sweep.csv");
    csv << table.to_csv();
    return table;
}

} // namespace biphoton::pipeline
