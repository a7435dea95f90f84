#include "biphoton/io/report.hpp"

#include <fstream>

#include "biphoton/core/errors.hpp"

namespace biphoton::io {

using core::CorrelationMap;
using core::IoError;
using core::ValidationError;
using estimator::GaussianFit;
using nlohmann::json;

namespace {

json epr_to_json(const core::EprResult& r) {
    return {{"delta_x2_m2", r.delta_x2},
            {"delta_p2_hbar2_per_m2", r.delta_p2},
            {"product_hbar2", r.product_hbar2},
            {"bound_hbar2", r.bound},
            {"violated", r.violated},
            {"violation_factor", r.violation_factor}};
}

json stats_to_json(const estimator::PeakStats& s) {
    return {{"amplitude", s.amplitude},
            {"volume", s.volume},
            {"fwhm_x_px", s.fwhm_x},
            {"fwhm_y_px", s.fwhm_y}};
}

json ratios_to_json(const estimator::ControlRatios& r) {
    return {{"amplitude_ratio", r.amplitude_ratio}, {"volume_ratio", r.volume_ratio}};
}

const char* kind_name(core::MapKind kind) {
    switch (kind) {
        case core::MapKind::Autocorrelation: return "autocorrelation";
        case core::MapKind::Autoconvolution: return "autoconvolution";
        case core::MapKind::CrossBackground: return "cross_background";
    }
    return "autocorrelation";
}

core::MapKind kind_from_name(const std::string& name) {
    if (name == "autocorrelation") return core::MapKind::Autocorrelation;
    if (name == "autoconvolution") return core::MapKind::Autoconvolution;
    if (name == "cross_background") return core::MapKind::CrossBackground;
    throw ValidationError("map: unknown kind '" + name + "'");
}

} // namespace

json fit_to_json(const GaussianFit& fit) {
    return {{"amplitude", fit.amplitude},
            {"center_x_px", fit.center_x},
            {"center_y_px", fit.center_y},
            {"sigma_x_px", fit.sigma_x},
            {"sigma_y_px", fit.sigma_y},
            {"offset", fit.offset},
            {"residual_ssd", fit.residual_ssd},
            {"converged", fit.converged},
            {"iterations", fit.iterations}};
}

GaussianFit fit_from_json(const json& j) {
    GaussianFit fit;
    try {
        fit.amplitude = j.at("amplitude").get<double>();
        fit.center_x = j.at("center_x_px").get<double>();
        fit.center_y = j.at("center_y_px").get<double>();
        fit.sigma_x = j.at("sigma_x_px").get<double>();
        fit.sigma_y = j.at("sigma_y_px").get<double>();
        fit.offset = j.at("offset").get<double>();
        fit.residual_ssd = j.at("residual_ssd").get<double>();
        fit.converged = j.at("converged").get<bool>();
        fit.iterations = j.at("iterations").get<int>();
    } catch (const json::exception& e) {
        throw ValidationError(std::string("fit: malformed JSON: ") + e.what());
    }
    return fit;
}

json map_to_json(const CorrelationMap& map) {
    map.validate();
    return {{"size", map.size},
            {"kind", kind_name(map.kind)},
            {"plane", core::to_string(map.plane)},
            {"frames_used", map.frames_used},
            {"frames_background", map.frames_background},
            {"values", map.values}};
}

CorrelationMap map_from_json(const json& j) {
    CorrelationMap map;
    try {
        map.size = j.at("size").get<int>();
        map.kind = kind_from_name(j.at("kind").get<std::string>());
        const std::string plane = j.at("plane").get<std::string>();
        if (plane != "image" && plane != "pupil")
            throw ValidationError("map: plane must be 'image' or 'pupil'");
        map.plane = plane == "image" ? core::Plane::Image : core::Plane::Pupil;
        map.frames_used = j.at("frames_used").get<long>();
        map.frames_background = j.at("frames_background").get<long>();
        map.values = j.at("values").get<std::vector<double>>();
    } catch (const json::exception& e) {
        throw ValidationError(std::string("map: malformed JSON: ") + e.what());
    }
    map.validate();
    return map;
}

namespace {

json parse_file(const std::filesystem::path& path, const char* what) {
    std::ifstream in(path);
    if (!in) throw IoError(std::string(what) + ": cannot open " + path.string());
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw IoError(std::string(what) + ": " + path.string() + " is not valid JSON: " +
                      e.what());
    }
}

void dump_file(const json& j, const std::filesystem::path& path, const char* what) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError(std::string(what) + ": cannot create " + path.string());
    out << j.dump(2) << "\n";
    if (!out) throw IoError(std::string(what) + ": write failed for " + path.string());
}

} // namespace

CorrelationMap load_map(const std::filesystem::path& path) {
    return map_from_json(parse_file(path, "load_map"));
}

void write_map(const CorrelationMap& map, const std::filesystem::path& path) {
    dump_file(map_to_json(map), path, "write_map");
}

GaussianFit load_fit(const std::filesystem::path& path) {
    return fit_from_json(parse_file(path, "load_fit"));
}

void write_fit(const GaussianFit& fit, const std::filesystem::path& path) {
    dump_file(fit_to_json(fit), path, "write_fit");
}

json report_to_json(const WitnessReport& report) {
    json j;
    j["epr"] = {{"x", epr_to_json(report.epr_x)}, {"y", epr_to_json(report.epr_y)}};
    j["fits"] = {{"image", fit_to_json(report.fit_image)},
                 {"pupil", fit_to_json(report.fit_pupil)}};
    j["peak_statistics"] = {{"image", stats_to_json(report.stats_image)},
                            {"pupil", stats_to_json(report.stats_pupil)}};
    j["widths"] = {{"delta_x_object_m", report.delta_x_object_m},
                   {"delta_x_detector_m", report.delta_x_detector_m},
                   {"delta_p_hbar_per_m", report.delta_p_hbar_per_m}};
    if (report.control_image || report.control_pupil) {
        json c = json::object();
        if (report.control_image) c["image"] = ratios_to_json(*report.control_image);
        if (report.control_pupil) c["pupil"] = ratios_to_json(*report.control_pupil);
        j["control"] = c;
    }
    j["provenance"] = {{"config", config_to_json(report.config)},
                       {"config_hash", report.config_hash},
                       {"master_seed", report.master_seed},
                       {"frames_image", report.frames_image},
                       {"frames_pupil", report.frames_pupil},
                       {"tool_version", report.tool_version}};
    j["timestamp"] = report.timestamp;
    return j;
}

void write_report(const WitnessReport& report, const std::filesystem::path& path) {
    dump_file(report_to_json(report), path, "write_report");
}

} // namespace biphoton::io
