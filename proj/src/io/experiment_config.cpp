#include "biphoton/io/experiment_config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>

#include "biphoton/core/errors.hpp"

namespace biphoton::io {

using core::ValidationError;
using nlohmann::json;

namespace {

/// Strict reader over one JSON object: typed getters record the keys they
/// touch, finish() rejects anything left over.
class ObjectReader {
public:
    ObjectReader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw ValidationError(path_ + ": expected a JSON object");
    }

    bool has(const std::string& key) const { return j_.contains(key); }

    double number(const std::string& key) {
        const json& v = get(key);
        if (!v.is_number()) throw ValidationError(field(key) + ": expected a number");
        return v.get<double>();
    }

    double number_or(const std::string& key, double fallback) {
        return has(key) ? number(key) : fallback;
    }

    long long integer(const std::string& key) {
        const json& v = get(key);
        if (!v.is_number_integer()) throw ValidationError(field(key) + ": expected an integer");
        return v.get<long long>();
    }

    long long integer_or(const std::string& key, long long fallback) {
        return has(key) ? integer(key) : fallback;
    }

    std::uint64_t unsigned_integer(const std::string& key) {
        const json& v = get(key);
        if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0))
            throw ValidationError(field(key) + ": expected a non-negative integer");
        return v.get<std::uint64_t>();
    }

    bool boolean(const std::string& key) {
        const json& v = get(key);
        if (!v.is_boolean()) throw ValidationError(field(key) + ": expected a boolean");
        return v.get<bool>();
    }

    bool boolean_or(const std::string& key, bool fallback) {
        return has(key) ? boolean(key) : fallback;
    }

    std::string text(const std::string& key) {
        const json& v = get(key);
        if (!v.is_string()) throw ValidationError(field(key) + ": expected a string");
        return v.get<std::string>();
    }

    const json& object(const std::string& key) {
        const json& v = get(key);
        if (!v.is_object()) throw ValidationError(field(key) + ": expected an object");
        return v;
    }

    std::string field(const std::string& key) const { return path_ + "." + key; }

    /// Reject keys that no getter consumed.
    void finish() const {
        for (const auto& item : j_.items())
            if (!seen_.count(item.key()))
                throw ValidationError(path_ + ": unknown key '" + item.key() + "'");
    }

private:
    const json& get(const std::string& key) {
        auto it = j_.find(key);
        if (it == j_.end()) throw ValidationError(field(key) + ": missing required key");
        seen_.insert(key);
        return *it;
    }

    const json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

core::CalibrationConfig parse_calibration(const json& j) {
    ObjectReader r(j, "calibration");
    core::CalibrationConfig cal;
    cal.f1 = r.number("f1_m");
    cal.f2 = r.number("f2_m");
    cal.f3 = r.number_or("f3_m", cal.f3);
    cal.lambda = r.number("lambda_m");
    cal.pupil_relay_magnification = r.number("pupil_relay_magnification");
    cal.pixel_pitch = r.number("pixel_pitch_m");
    r.finish();
    return cal;
}

sim::SourceConfig parse_source(const json& j) {
    ObjectReader r(j, "source");
    sim::SourceConfig s;
    s.sigma_pump = r.number("sigma_pump_m");
    s.sigma_pair = r.number("sigma_pair_m");
    s.sigma_psum = r.number("sigma_psum_hbar_per_m");
    s.sigma_pdiff = r.number("sigma_pdiff_hbar_per_m");
    s.pairs_per_frame_mean = r.number("pairs_per_frame_mean");
    s.stray_photons_per_frame_mean = r.number_or("stray_photons_per_frame_mean", 0.0);
    r.finish();
    return s;
}

sim::PsfModel parse_psf(const json& j) {
    ObjectReader r(j, "optics.psf");
    sim::PsfModel psf;
    const std::string model = r.text("model");
    if (model == "gaussian") {
        psf.kind = sim::PsfKind::GaussianOfSigma;
        psf.sigma = r.number("sigma_m");
    } else if (model == "airy") {
        psf.kind = sim::PsfKind::AiryFromAperture;
    } else {
        throw ValidationError("optics.psf.model: must be 'gaussian' or 'airy'");
    }
    r.finish();
    return psf;
}

sim::OpticsSimConfig parse_optics(const json& j, const core::CalibrationConfig& cal) {
    ObjectReader r(j, "optics");
    sim::OpticsSimConfig o;
    o.aperture_diameter = r.number("aperture_diameter_m");
    o.transmission_eta = r.number_or("transmission_eta", 1.0);
    o.psf = parse_psf(r.object("psf"));
    o.calibration = cal;
    r.finish();
    return o;
}

sim::CameraConfig parse_camera(const json& j) {
    ObjectReader r(j, "camera");
    sim::CameraConfig c;
    c.width = static_cast<int>(r.integer("width"));
    c.height = static_cast<int>(r.integer("height"));
    c.qe = r.number("qe");
    c.gain = r.number("gain_adu_per_photon");
    c.read_noise_sigma = r.number("read_noise_sigma_adu");
    c.offset = r.number("offset_adu");
    c.prnu_amplitude = r.number_or("prnu_amplitude", 0.0);
    c.nonlinearity_alpha = r.number_or("nonlinearity_alpha_per_adu", 0.0);
    c.drift_rho = r.number_or("drift_rho", 0.0);
    c.drift_amplitude = r.number_or("drift_amplitude", 0.0);
    r.finish();
    return c;
}

estimator::FitRegion parse_fit_region(const json& j, const std::string& path,
                                      const estimator::FitRegion& defaults) {
    ObjectReader r(j, path);
    estimator::FitRegion region = defaults;
    region.diameter = static_cast<int>(r.integer_or("diameter_px", defaults.diameter));
    region.exclude_center = r.boolean_or("exclude_center", defaults.exclude_center);
    r.finish();
    return region;
}

core::Plane parse_plane(const std::string& s, const std::string& path) {
    if (s == "image") return core::Plane::Image;
    if (s == "pupil") return core::Plane::Pupil;
    throw ValidationError(path + ": must be 'image' or 'pupil'");
}

} // namespace

void ExperimentConfig::validate() const {
    try {
        calibration.validate();
        source.validate();
        optics.validate();
        camera.validate();
        correlation.validate(camera.width, camera.height);
        if (pupil_background_lag < -1)
            throw ValidationError("correlation.pupil_background_lag: must be >= 0");
        if (fit_image.diameter < 5 || fit_image.diameter > correlation.crop_size)
            throw ValidationError("fit.image.diameter_px: must be in [5, crop_size]");
        if (fit_pupil.diameter < 5 || fit_pupil.diameter > correlation.crop_size)
            throw ValidationError("fit.pupil.diameter_px: must be in [5, crop_size]");
        if (n_frames < 1) throw ValidationError("n_frames: must be >= 1");
        if (control) {
            if (!(control->transmission_eta > 0.0 && control->transmission_eta <= 1.0))
                throw ValidationError("control.transmission_eta: must be in (0,1]");
        }
    } catch (const ValidationError& e) {
        throw ValidationError(std::string("config: ") + e.what());
    }
}

ExperimentConfig config_from_json(const json& j) {
    ObjectReader r(j, "config");
    ExperimentConfig c;
    c.calibration = parse_calibration(r.object("calibration"));
    c.source = parse_source(r.object("source"));
    c.optics = parse_optics(r.object("optics"), c.calibration);
    c.camera = parse_camera(r.object("camera"));

    if (r.has("correlation")) {
        ObjectReader cr(r.object("correlation"), "correlation");
        c.correlation.background_lag =
            static_cast<int>(cr.integer_or("background_lag", c.correlation.background_lag));
        c.pupil_background_lag =
            static_cast<int>(cr.integer_or("pupil_background_lag", c.pupil_background_lag));
        c.correlation.crop_size =
            static_cast<int>(cr.integer_or("crop_size_px", c.correlation.crop_size));
        cr.finish();
    }

    if (r.has("fit")) {
        ObjectReader fr(r.object("fit"), "fit");
        if (fr.has("image")) c.fit_image = parse_fit_region(fr.object("image"), "fit.image", c.fit_image);
        if (fr.has("pupil")) c.fit_pupil = parse_fit_region(fr.object("pupil"), "fit.pupil", c.fit_pupil);
        fr.finish();
    }

    c.n_frames = static_cast<int>(r.integer("n_frames"));
    c.plane = parse_plane(r.text("plane"), "plane");
    c.master_seed = r.unsigned_integer("master_seed");

    if (r.has("control")) {
        ObjectReader cr(r.object("control"), "control");
        ControlConfig control;
        control.transmission_eta = cr.number("transmission_eta");
        control.compensate_pump = cr.boolean_or("compensate_pump", true);
        cr.finish();
        c.control = control;
    }

    if (r.has("stacks")) {
        ObjectReader sr(r.object("stacks"), "stacks");
        if (sr.has("image_path")) c.stacks.image_path = sr.text("image_path");
        if (sr.has("pupil_path")) c.stacks.pupil_path = sr.text("pupil_path");
        sr.finish();
    }

    if (r.has("metadata")) {
        const json& m = r.object("metadata");
        for (const auto& item : m.items()) {
            if (!item.value().is_string())
                throw ValidationError("metadata." + item.key() + ": expected a string");
            c.metadata[item.key()] = item.value().get<std::string>();
        }
    }
    r.finish();

    c.validate();
    return c;
}

json config_to_json(const ExperimentConfig& c) {
    json j;
    j["calibration"] = {{"f1_m", c.calibration.f1},
                        {"f2_m", c.calibration.f2},
                        {"f3_m", c.calibration.f3},
                        {"lambda_m", c.calibration.lambda},
                        {"pupil_relay_magnification", c.calibration.pupil_relay_magnification},
                        {"pixel_pitch_m", c.calibration.pixel_pitch}};
    j["source"] = {{"sigma_pump_m", c.source.sigma_pump},
                   {"sigma_pair_m", c.source.sigma_pair},
                   {"sigma_psum_hbar_per_m", c.source.sigma_psum},
                   {"sigma_pdiff_hbar_per_m", c.source.sigma_pdiff},
                   {"pairs_per_frame_mean", c.source.pairs_per_frame_mean},
                   {"stray_photons_per_frame_mean", c.source.stray_photons_per_frame_mean}};
    json psf;
    if (c.optics.psf.kind == sim::PsfKind::GaussianOfSigma)
        psf = {{"model", "gaussian"}, {"sigma_m", c.optics.psf.sigma}};
    else
        psf = {{"model", "airy"}};
    j["optics"] = {{"aperture_diameter_m", c.optics.aperture_diameter},
                   {"transmission_eta", c.optics.transmission_eta},
                   {"psf", psf}};
    j["camera"] = {{"width", c.camera.width},
                   {"height", c.camera.height},
                   {"qe", c.camera.qe},
                   {"gain_adu_per_photon", c.camera.gain},
                   {"read_noise_sigma_adu", c.camera.read_noise_sigma},
                   {"offset_adu", c.camera.offset},
                   {"prnu_amplitude", c.camera.prnu_amplitude},
                   {"nonlinearity_alpha_per_adu", c.camera.nonlinearity_alpha},
                   {"drift_rho", c.camera.drift_rho},
                   {"drift_amplitude", c.camera.drift_amplitude}};
    j["correlation"] = {{"background_lag", c.correlation.background_lag},
                        {"crop_size_px", c.correlation.crop_size}};
    if (c.pupil_background_lag >= 0)
        j["correlation"]["pupil_background_lag"] = c.pupil_background_lag;
    j["fit"] = {{"image",
                 {{"diameter_px", c.fit_image.diameter},
                  {"exclude_center", c.fit_image.exclude_center}}},
                {"pupil",
                 {{"diameter_px", c.fit_pupil.diameter},
                  {"exclude_center", c.fit_pupil.exclude_center}}}};
    j["n_frames"] = c.n_frames;
    j["plane"] = core::to_string(c.plane);
    j["master_seed"] = c.master_seed;
    if (c.control)
        j["control"] = {{"transmission_eta", c.control->transmission_eta},
                        {"compensate_pump", c.control->compensate_pump}};
    if (c.stacks.image_path || c.stacks.pupil_path) {
        json s = json::object();
        if (c.stacks.image_path) s["image_path"] = c.stacks.image_path->string();
        if (c.stacks.pupil_path) s["pupil_path"] = c.stacks.pupil_path->string();
        j["stacks"] = s;
    }
    if (!c.metadata.empty()) {
        json m = json::object();
        for (const auto& [k, v] : c.metadata) m[k] = v;
        j["metadata"] = m;
    }
    return j;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw core::IoError("load_config: cannot open " + path.string());
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw ValidationError("load_config: " + path.string() + " is not valid JSON: " + e.what());
    }
    return config_from_json(j);
}

std::string config_hash(const ExperimentConfig& config) {
    const std::string dump = config_to_json(config).dump();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : dump) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

} // namespace biphoton::io
