#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>

#include <json.hpp>

#include "biphoton/corr/correlator.hpp"
#include "biphoton/core/types.hpp"
#include "biphoton/estimator/gaussian_fit.hpp"
#include "biphoton/sim/config.hpp"

namespace biphoton::io {

/// Control-experiment block: rerun with extra downstream attenuation, and
/// (matched-flux mode) the pair rate raised by 1/eta so the detected flux
/// stays close to the main run.
struct ControlConfig {
    double transmission_eta = 0.251188643150958;  // 10^-0.6
    bool compensate_pump = true;
};

/// Optional pointers at pre-recorded stacks; when present the pipeline loads
/// these instead of simulating.
struct StackInputs {
    std::optional<std::filesystem::path> image_path;
    std::optional<std::filesystem::path> pupil_path;
};

/// One human-readable configuration document driving every stage. Unknown
/// keys anywhere are an error.
struct ExperimentConfig {
    core::CalibrationConfig calibration;
    sim::SourceConfig source;
    sim::OpticsSimConfig optics;  // optics.calibration mirrors `calibration`
    sim::CameraConfig camera;
    corr::CorrelationJob correlation;  // mode is set per plane at run time
    int pupil_background_lag = -1;     // -1: same as correlation.background_lag
    estimator::FitRegion fit_image{80, true};
    estimator::FitRegion fit_pupil{80, false};
    int n_frames = 300;
    core::Plane plane = core::Plane::Image;
    std::uint64_t master_seed = 1;
    std::optional<ControlConfig> control;
    StackInputs stacks;
    std::map<std::string, std::string> metadata;

    int background_lag_for(core::Plane p) const {
        return p == core::Plane::Pupil && pupil_background_lag >= 0 ? pupil_background_lag
                                                                    : correlation.background_lag;
    }
    const estimator::FitRegion& fit_region_for(core::Plane p) const {
        return p == core::Plane::Image ? fit_image : fit_pupil;
    }

    void validate() const;
};

ExperimentConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const ExperimentConfig& config);

ExperimentConfig load_config(const std::filesystem::path& path);

/// FNV-1a 64 hash of the canonical (sorted-key) JSON dump, hex string.
std::string config_hash(const ExperimentConfig& config);

} // namespace biphoton::io
