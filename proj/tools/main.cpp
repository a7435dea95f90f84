#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "biphoton/core/errors.hpp"
#include "biphoton/core/geometry.hpp"
#include "biphoton/corr/correlator.hpp"
#include "biphoton/estimator/witness.hpp"
#include "biphoton/io/experiment_config.hpp"
#include "biphoton/io/heatmap.hpp"
#include "biphoton/io/report.hpp"
#include "biphoton/io/stack_io.hpp"
#include "biphoton/pipeline/pipeline.hpp"
#include "biphoton/sim/simulate.hpp"

namespace fs = std::filesystem;
using namespace biphoton;

namespace {

struct CommonArgs {
    std::string config_path;
    std::string out_dir = ".";
    int threads = 0;
    bool has_seed = false;
    std::uint64_t seed = 0;
};

void add_common(CLI::App* cmd, CommonArgs& args, bool needs_config = true) {
    auto* c = cmd->add_option("--config", args.config_path, "Experiment configuration JSON");
    if (needs_config) c->required();
    cmd->add_option("--out", args.out_dir, "Output directory");
    cmd->add_option("--threads", args.threads, "Worker threads (0 = auto)");
    cmd->add_option("--seed", args.seed, "Master seed override")
        ->each([&args](const std::string&) { args.has_seed = true; });
}

io::ExperimentConfig load(const CommonArgs& args) {
    io::ExperimentConfig config = io::load_config(args.config_path);
    if (args.has_seed) config.master_seed = args.seed;
    return config;
}

core::Plane plane_from_string(const std::string& s) {
    if (s == "image") return core::Plane::Image;
    if (s == "pupil") return core::Plane::Pupil;
    throw core::ValidationError("--plane must be 'image' or 'pupil'");
}

nlohmann::json stack_sidecar(const io::ExperimentConfig& config, const sim::GroundTruth& gt,
                             std::uint64_t seed) {
    nlohmann::json j;
    j["config"] = io::config_to_json(config);
    j["config_hash"] = io::config_hash(config);
    j["master_seed"] = seed;
    j["ground_truth"] = {
        {"expected_peak_sigma_image_m", gt.expected_peak_sigma_image},
        {"expected_peak_sigma_pupil_hbar_per_m", gt.expected_peak_sigma_pupil},
        {"expected_pair_detection_rate", gt.expected_pair_detection_rate},
        {"source_epr_product_hbar", gt.source.epr_product_hbar()},
    };
    j["tool_version"] = io::kToolVersion;
    return j;
}

int run_simulate(const CommonArgs& args, const std::string& plane_flag) {
    io::ExperimentConfig config = load(args);
    const core::Plane plane =
        plane_flag.empty() ? config.plane : plane_from_string(plane_flag);
    fs::create_directories(args.out_dir);
    auto [stack, gt] = sim::simulate_stack(config.source, config.optics, config.camera,
                                           config.n_frames, plane, config.master_seed,
                                           args.threads);
    const nlohmann::json sidecar = stack_sidecar(config, gt, config.master_seed);
    const fs::path path =
        fs::path(args.out_dir) / (std::string(core::to_string(plane)) + "_stack.bphs");
    io::write_stack(stack, path, io::StackDtype::U16, &sidecar);
    std::cout << "wrote " << path.string() << " (" << stack.size() << " frames, "
              << stack.width() << "x" << stack.height() << ")\n";
    return 0;
}

int run_correlate(const CommonArgs& args, const std::string& stack_path, int lag_override,
                  bool no_background) {
    io::ExperimentConfig config = load(args);
    io::StackFileSource source(stack_path);
    corr::CorrelationJob job;
    job.mode = source.plane() == core::Plane::Image
                   ? corr::CorrelationJob::Mode::ImageCorrelation
                   : corr::CorrelationJob::Mode::PupilConvolution;
    job.background_lag = config.background_lag_for(source.plane());
    if (lag_override >= 0) job.background_lag = lag_override;
    if (no_background) job.background_lag = 0;
    job.crop_size = config.correlation.crop_size;

    const auto result = corr::accumulate(source, job, args.threads);
    fs::create_directories(args.out_dir);
    const fs::path map_path =
        fs::path(args.out_dir) / (std::string(core::to_string(source.plane())) + "_map.json");
    io::write_map(result.map, map_path);
    if (result.background)
        io::write_map(*result.background,
                      fs::path(args.out_dir) /
                          (std::string(core::to_string(source.plane())) + "_background.json"));
    std::cout << "wrote " << map_path.string() << " (" << result.map.frames_used
              << " frames, lag " << job.background_lag << ")\n";
    return 0;
}

int run_fit(const CommonArgs& args, const std::string& map_path, int diameter,
            int exclude_center_flag) {
    const core::CorrelationMap map = io::load_map(map_path);
    estimator::FitRegion region = estimator::default_fit_region(map.kind);
    if (!args.config_path.empty()) {
        io::ExperimentConfig config = load(args);
        region = config.fit_region_for(map.plane);
    }
    if (diameter > 0) region.diameter = diameter;
    if (exclude_center_flag >= 0) region.exclude_center = exclude_center_flag != 0;
    region.validate(map);

    const auto cells = estimator::circular_mask(map, region);
    const auto fit = estimator::fit_gaussian2d(cells);
    if (!fit.converged) throw core::NumericalError("fit did not converge");

    fs::create_directories(args.out_dir);
    const fs::path fit_path =
        fs::path(args.out_dir) / (std::string(core::to_string(map.plane)) + "_fit.json");
    io::write_fit(fit, fit_path);
    std::printf("sigma_x = %.6g px, sigma_y = %.6g px, amplitude = %.6g, offset = %.6g (%d it)\n",
                fit.sigma_x, fit.sigma_y, fit.amplitude, fit.offset, fit.iterations);
    std::cout << "wrote " << fit_path.string() << "\n";
    return 0;
}

int run_witness(const CommonArgs& args, const std::string& image_fit_path,
                const std::string& pupil_fit_path) {
    io::ExperimentConfig config = load(args);
    const auto fit_image = io::load_fit(image_fit_path);
    const auto fit_pupil = io::load_fit(pupil_fit_path);
    const core::EprResult x =
        estimator::epr_witness(fit_image, fit_pupil, config.calibration, estimator::Axis::X);
    const core::EprResult y =
        estimator::epr_witness(fit_image, fit_pupil, config.calibration, estimator::Axis::Y);

    nlohmann::json j;
    j["x"] = {{"delta_x2_m2", x.delta_x2},
              {"delta_p2_hbar2_per_m2", x.delta_p2},
              {"product_hbar2", x.product_hbar2},
              {"bound_hbar2", x.bound},
              {"violated", x.violated},
              {"violation_factor", x.violation_factor}};
    j["y"] = {{"delta_x2_m2", y.delta_x2},
              {"delta_p2_hbar2_per_m2", y.delta_p2},
              {"product_hbar2", y.product_hbar2},
              {"bound_hbar2", y.bound},
              {"violated", y.violated},
              {"violation_factor", y.violation_factor}};
    fs::create_directories(args.out_dir);
    const fs::path path = fs::path(args.out_dir) / "witness.json";
    std::ofstream out(path);
    if (!out) throw core::IoError("witness: cannot create " + path.string());
    out << j.dump(2) << "\n";
    std::printf("product = %.6g hbar^2 (bound 0.25) -> %s, factor %.4g\n", x.product_hbar2,
                x.violated ? "VIOLATED" : "not violated", x.violation_factor);
    return 0;
}

int run_render(const CommonArgs& args, const std::string& map_path,
               const std::vector<std::string>& shared_with) {
    const core::CorrelationMap map = io::load_map(map_path);
    double max_value;
    std::vector<core::CorrelationMap> others;
    if (shared_with.empty()) {
        max_value = io::shared_max({&map});
    } else {
        std::vector<const core::CorrelationMap*> all = {&map};
        others.reserve(shared_with.size());
        for (const auto& p : shared_with) {
            others.push_back(io::load_map(p));
            all.push_back(&others.back());
        }
        max_value = io::shared_max(all);
    }
    fs::create_directories(args.out_dir);
    const fs::path out_path =
        fs::path(args.out_dir) / (fs::path(map_path).stem().string() + ".pgm");
    io::render_heatmap_pgm(map, out_path, max_value);
    std::cout << "wrote " << out_path.string() << "\n";
    return 0;
}

int run_sweep_cmd(const CommonArgs& args, const std::vector<double>& apertures_mm) {
    io::ExperimentConfig config = load(args);
    std::vector<double> meters;
    meters.reserve(apertures_mm.size());
    for (double mm : apertures_mm) meters.push_back(mm * 1e-3);
    const auto table = pipeline::run_sweep(config, meters, args.out_dir, args.threads);
    std::cout << table.to_csv();
    return 0;
}

int run_pipeline_cmd(const CommonArgs& args) {
    io::ExperimentConfig config = load(args);
    const auto report = pipeline::run_pipeline(config, args.out_dir, args.threads);
    std::printf("delta_x = %.4g um (object), delta_p = %.6g hbar/m\n",
                report.delta_x_object_m * 1e6, report.delta_p_hbar_per_m);
    std::printf("product = %.6g hbar^2 -> %s (factor %.4g)\n", report.epr_x.product_hbar2,
                report.epr_x.violated ? "VIOLATED" : "not violated",
                report.epr_x.violation_factor);
    if (report.control_image)
        std::printf("control/main volume ratio (image) = %.4g\n",
                    report.control_image->volume_ratio);
    std::cout << "report: " << (fs::path(args.out_dir) / "report.json").string() << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Biphoton correlation simulator and EPR-witness analysis toolkit"};
    app.require_subcommand(1);

    CommonArgs args;
    std::string plane_flag;
    std::string stack_path, map_path, image_fit_path, pupil_fit_path;
    std::vector<std::string> shared_with;
    std::vector<double> apertures_mm;
    int lag_override = -1;
    bool no_background = false;
    int diameter = 0;
    int exclude_center_flag = -1;

    auto* sim_cmd = app.add_subcommand("simulate", "Synthesize a frame stack");
    add_common(sim_cmd, args);
    sim_cmd->add_option("--plane", plane_flag, "image or pupil (default: config)");

    auto* corr_cmd =
        app.add_subcommand("correlate", "Accumulate a correlation map from a stack file");
    add_common(corr_cmd, args);
    corr_cmd->add_option("--stack", stack_path, "BPHS stack file")->required();
    corr_cmd->add_option("--lag", lag_override, "Background lag override");
    corr_cmd->add_flag("--no-background", no_background, "Disable background subtraction");

    auto* fit_cmd = app.add_subcommand("fit", "Fit a 2D Gaussian to a correlation map");
    add_common(fit_cmd, args, /*needs_config=*/false);
    fit_cmd->add_option("--map", map_path, "Map JSON file")->required();
    fit_cmd->add_option("--diameter", diameter, "Fit mask diameter in px");
    fit_cmd->add_option("--exclude-center", exclude_center_flag,
                        "1 to exclude the central cell, 0 to keep it");

    auto* wit_cmd = app.add_subcommand("witness", "Evaluate the EPR witness from two fits");
    add_common(wit_cmd, args);
    wit_cmd->add_option("--image-fit", image_fit_path, "Image-plane fit JSON")->required();
    wit_cmd->add_option("--pupil-fit", pupil_fit_path, "Pupil-plane fit JSON")->required();

    auto* render_cmd = app.add_subcommand("render", "Render a map as an 8-bit PGM heatmap");
    add_common(render_cmd, args, /*needs_config=*/false);
    render_cmd->add_option("--map", map_path, "Map JSON file")->required();
    render_cmd->add_option("--shared-with", shared_with,
                           "Other map JSON files sharing the brightness scale");

    auto* sweep_cmd = app.add_subcommand("sweep", "Aperture sweep (image plane)");
    add_common(sweep_cmd, args);
    sweep_cmd->add_option("--aperture", apertures_mm, "Aperture diameter in mm (repeatable)")
        ->required()
        ->expected(-2);

    auto* pipe_cmd = app.add_subcommand("pipeline", "Full simulate/correlate/fit/witness chain");
    add_common(pipe_cmd, args);

    CLI11_PARSE(app, argc, argv);

    try {
        if (sim_cmd->parsed()) return run_simulate(args, plane_flag);
        if (corr_cmd->parsed()) return run_correlate(args, stack_path, lag_override, no_background);
        if (fit_cmd->parsed()) return run_fit(args, map_path, diameter, exclude_center_flag);
        if (wit_cmd->parsed()) return run_witness(args, image_fit_path, pupil_fit_path);
        if (render_cmd->parsed()) return run_render(args, map_path, shared_with);
        if (sweep_cmd->parsed()) return run_sweep_cmd(args, apertures_mm);
        if (pipe_cmd->parsed()) return run_pipeline_cmd(args);
    } catch (const core::ValidationError& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return 1;
    } catch (const core::IoError& e) {
        std::cerr << "i/o error: " << e.what() << "\n";
        return 2;
    } catch (const core::NumericalError& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
