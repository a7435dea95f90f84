#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "biphoton/core/types.hpp"
#include "biphoton/io/experiment_config.hpp"
#include "biphoton/io/report.hpp"
#include "biphoton/sim/config.hpp"

namespace biphoton::pipeline {

/// Stack plus its ground truth (absent when the stack was loaded from disk).
struct PlaneRun {
    core::Stack stack;
    std::optional<sim::GroundTruth> ground_truth;
};

/// Simulate (or load, when the config points at a file) the stack for one
/// plane of the experiment.
PlaneRun acquire_stack(const io::ExperimentConfig& config, core::Plane plane,
                       std::uint64_t master_seed, int threads);

/// Derive the control variant of a config: extra downstream attenuation and,
/// in matched-flux mode, the pair rate raised by 1/eta.
io::ExperimentConfig control_variant(const io::ExperimentConfig& config);

/// Deterministic seed for the control acquisition of a given plane.
std::uint64_t control_seed(std::uint64_t master_seed);

/// Full chain: acquire both planes, accumulate, fit, evaluate the witness,
/// optionally run the matched-flux control, write report JSON and rendered
/// maps into out_dir. Any stage failure aborts with the stage name prefixed.
io::WitnessReport run_pipeline(const io::ExperimentConfig& config,
                               const std::filesystem::path& out_dir, int threads = 0);

struct SweepRow {
    double aperture_diameter_m = 0.0;
    double sigma_x_px = 0.0;
    double sigma_y_px = 0.0;
    double sigma_x_object_m = 0.0;
    double amplitude = 0.0;
    double volume = 0.0;
    bool converged = false;
    std::string error;  // non-empty when this aperture failed
};

struct SweepTable {
    std::vector<SweepRow> rows;  // ordered as the input apertures
    std::string to_csv() const;
};

/// Image-plane aperture sweep. With a Gaussian PSF the blur scales as 1/D
/// from the base config's (sigma, aperture) reference point; the Airy model
/// uses each diameter directly. Per-aperture failures are recorded in the
/// row and the sweep continues.
SweepTable run_sweep(const io::ExperimentConfig& config,
                     const std::vector<double>& aperture_diameters_m,
                     const std::filesystem::path& out_dir, int threads = 0);

} // namespace biphoton::pipeline
