#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include <json.hpp>

#include "biphoton/core/types.hpp"
#include "biphoton/estimator/gaussian_fit.hpp"
#include "biphoton/estimator/witness.hpp"
#include "biphoton/io/experiment_config.hpp"

namespace biphoton::io {

inline constexpr const char* kToolVersion = "1.0.0";

/// Self-contained result of a full pipeline run. Everything except
/// `timestamp` is a pure function of (config, seed).
struct WitnessReport {
    core::EprResult epr_x;
    core::EprResult epr_y;
    estimator::GaussianFit fit_image;
    estimator::GaussianFit fit_pupil;
    estimator::PeakStats stats_image;
    estimator::PeakStats stats_pupil;
    double delta_x_object_m = 0.0;    // fitted image sigma in crystal-plane meters
    double delta_x_detector_m = 0.0;  // same width at the detector, for comparison
    double delta_p_hbar_per_m = 0.0;
    std::optional<estimator::ControlRatios> control_image;
    std::optional<estimator::ControlRatios> control_pupil;
    // provenance
    ExperimentConfig config;
    std::string config_hash;
    std::uint64_t master_seed = 0;
    long frames_image = 0;
    long frames_pupil = 0;
    std::string tool_version = kToolVersion;
    std::string timestamp;  // excluded from reproducibility comparisons
};

nlohmann::json report_to_json(const WitnessReport& report);
void write_report(const WitnessReport& report, const std::filesystem::path& path);

// Stage artifacts so correlate / fit / witness can run independently.
nlohmann::json map_to_json(const core::CorrelationMap& map);
core::CorrelationMap map_from_json(const nlohmann::json& j);
core::CorrelationMap load_map(const std::filesystem::path& path);
void write_map(const core::CorrelationMap& map, const std::filesystem::path& path);

nlohmann::json fit_to_json(const estimator::GaussianFit& fit);
estimator::GaussianFit fit_from_json(const nlohmann::json& j);
estimator::GaussianFit load_fit(const std::filesystem::path& path);
void write_fit(const estimator::GaussianFit& fit, const std::filesystem::path& path);

} // namespace biphoton::io
