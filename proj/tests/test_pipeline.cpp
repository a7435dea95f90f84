#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "biphoton/core/geometry.hpp"
#include "biphoton/io/report.hpp"
#include "biphoton/pipeline/pipeline.hpp"

using namespace biphoton;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& leaf) {
    const fs::path dir = fs::temp_directory_path() / "biphoton_pipeline_tests" / leaf;
    fs::create_directories(dir);
    return dir;
}

/// Desk-scale config with an EPR-violating source; small enough for unit
/// tests, large enough that the fits converge cleanly.
io::ExperimentConfig small_epr_config() {
    io::ExperimentConfig c;
    c.calibration.f1 = 0.150;
    c.calibration.f2 = 0.250;
    c.calibration.lambda = 520e-9;
    c.calibration.pupil_relay_magnification = 0.3;
    c.calibration.pixel_pitch = 6.5e-6;

    c.source.sigma_pump = 80e-6;
    c.source.sigma_pair = 6.76e-6;
    c.source.sigma_psum = 6348.7;
    c.source.sigma_pdiff = 3.0e4;
    c.source.pairs_per_frame_mean = 60000;
    c.source.stray_photons_per_frame_mean = 0.0;

    c.optics.aperture_diameter = 12e-3;
    c.optics.psf = {sim::PsfKind::GaussianOfSigma, 2e-6};
    c.optics.transmission_eta = 1.0;
    c.optics.calibration = c.calibration;

    c.camera.width = 96;
    c.camera.height = 96;
    c.camera.qe = 0.9;
    c.camera.gain = 1.0;
    c.camera.read_noise_sigma = 2.0;
    c.camera.offset = 100.0;

    c.correlation.background_lag = 2;
    c.pupil_background_lag = 0;
    c.correlation.crop_size = 81;
    c.fit_image = {60, true};
    c.fit_pupil = {32, false};
    c.n_frames = 150;
    c.plane = core::Plane::Image;
    c.master_seed = 2024;
    return c;
}

} // namespace

TEST_CASE("pipeline: EPR-violating desk-scale run") {
    const auto config = small_epr_config();
    const fs::path out = temp_dir("epr_true");
    const auto report = pipeline::run_pipeline(config, out, 2);

    CHECK(report.epr_x.violated);
    CHECK(report.epr_x.product_hbar2 < 0.25);
    CHECK(report.epr_y.violated);
    CHECK(report.fit_image.converged);
    CHECK(report.fit_pupil.converged);
    // widths land in the neighborhood of the configured source
    CHECK(report.delta_x_object_m == doctest::Approx(6.97e-6).epsilon(0.2));
    CHECK(report.delta_p_hbar_per_m == doctest::Approx(6394.0).epsilon(0.2));

    CHECK(fs::exists(out / "report.json"));
    CHECK(fs::exists(out / "image_map.pgm"));
    CHECK(fs::exists(out / "pupil_map.pgm"));
    CHECK(fs::exists(out / "image_map.json"));

    // detector-plane width is the object-plane width times the magnification
    CHECK(report.delta_x_detector_m ==
          doctest::Approx(report.delta_x_object_m * core::image_magnification(config.calibration))
              .epsilon(1e-9));
}

TEST_CASE("pipeline: separable-scale source does not violate") {
    auto config = small_epr_config();
    // sigma_pair * sigma_psum = 1 hbar per axis
    config.calibration.pupil_relay_magnification = 0.1;
    config.optics.calibration = config.calibration;
    config.source.sigma_pair = 25e-6;
    config.source.sigma_psum = 3.0e4;   // product 0.75 hbar
    config.source.sigma_pdiff = 1.2e5;  // keeps the pupil illumination wide
    config.camera.width = 128;
    config.camera.height = 128;
    config.source.pairs_per_frame_mean = 100000;
    config.n_frames = 150;
    config.correlation.crop_size = 101;
    config.fit_image = {70, true};
    config.fit_pupil = {48, false};

    CHECK(config.source.epr_product_hbar() > 0.5);
    const fs::path out = temp_dir("epr_false");
    const auto report = pipeline::run_pipeline(config, out, 2);
    CHECK_FALSE(report.epr_x.violated);
    CHECK(report.epr_x.product_hbar2 > 0.25);
}

TEST_CASE("pipeline: missing stack file fails in the acquire stage") {
    auto config = small_epr_config();
    config.stacks.image_path = "/nonexistent/stack.bphs";
    const fs::path out = temp_dir("missing_stack");
    CHECK_THROWS_WITH_AS(pipeline::run_pipeline(config, out, 1),
                         doctest::Contains("acquire-image"), core::IoError);
}

TEST_CASE("pipeline: reports reproduce bit-identically") {
    auto config = small_epr_config();
    config.camera.width = 64;
    config.camera.height = 64;
    config.source.pairs_per_frame_mean = 30000;
    config.n_frames = 60;
    config.correlation.crop_size = 61;
    config.fit_image = {40, true};
    config.fit_pupil = {24, false};

    const auto a = pipeline::run_pipeline(config, temp_dir("repro_a"), 2);
    const auto b = pipeline::run_pipeline(config, temp_dir("repro_b"), 1);

    auto ja = io::report_to_json(a);
    auto jb = io::report_to_json(b);
    ja.erase("timestamp");
    jb.erase("timestamp");
    CHECK(ja == jb);
    CHECK(ja.dump() == jb.dump());

    config.master_seed += 1;
    const auto c = pipeline::run_pipeline(config, temp_dir("repro_c"), 2);
    auto jc = io::report_to_json(c);
    jc.erase("timestamp");
    CHECK(jc != ja);
}

TEST_CASE("control variant bookkeeping") {
    auto config = small_epr_config();
    config.control = io::ControlConfig{0.251188643150958, true};
    const auto cc = pipeline::control_variant(config);
    CHECK(cc.optics.transmission_eta ==
          doctest::Approx(0.251188643150958).epsilon(1e-12));
    CHECK(cc.source.pairs_per_frame_mean ==
          doctest::Approx(config.source.pairs_per_frame_mean / 0.251188643150958)
              .epsilon(1e-12));
    CHECK_FALSE(cc.control.has_value());

    config.control->compensate_pump = false;
    const auto fixed_pump = pipeline::control_variant(config);
    CHECK(fixed_pump.source.pairs_per_frame_mean == config.source.pairs_per_frame_mean);

    config.control.reset();
    CHECK_THROWS_AS(pipeline::control_variant(config), core::ValidationError);
}

TEST_CASE("sweep: rows track apertures in order and failures are recorded") {
    auto config = small_epr_config();
    config.camera.width = 64;
    config.camera.height = 64;
    config.source.sigma_pump = 60e-6;
    config.source.sigma_pair = 3e-6;
    config.source.pairs_per_frame_mean = 40000;
    config.n_frames = 80;
    config.correlation.crop_size = 61;
    config.fit_image = {40, true};
    config.optics.aperture_diameter = 12e-3;
    config.optics.psf.sigma = 2e-6;

    const std::vector<double> apertures = {12e-3, 0.0, 6e-3};
    const fs::path out = temp_dir("sweep");
    const auto table = pipeline::run_sweep(config, apertures, out, 2);
    REQUIRE(table.rows.size() == 3);
    CHECK(table.rows[0].aperture_diameter_m == 12e-3);
    CHECK(table.rows[0].error.empty());
    CHECK(table.rows[0].converged);
    CHECK_FALSE(table.rows[1].error.empty());  // bad aperture recorded, sweep continued
    CHECK(table.rows[2].error.empty());
    // halving the aperture doubles the blur: fitted width must grow
    CHECK(table.rows[2].sigma_x_px > table.rows[0].sigma_x_px);

    CHECK(fs::exists(out / "sweep.csv"));
    std::ifstream csv(out / "sweep.csv");
    std::string header;
    std::getline(csv, header);
    CHECK(header ==
          "aperture_diameter_m,sigma_x_px,sigma_y_px,sigma_x_object_m,amplitude,volume,"
          "converged,error");

    CHECK_THROWS_AS(pipeline::run_sweep(config, {12e-3}, out, 1), core::ValidationError);
}

TEST_CASE("sweep: identical apertures give statistically compatible rows") {
    auto config = small_epr_config();
    config.camera.width = 64;
    config.camera.height = 64;
    config.source.sigma_pump = 60e-6;
    config.source.sigma_pair = 4e-6;
    config.source.pairs_per_frame_mean = 50000;
    config.n_frames = 120;
    config.correlation.crop_size = 61;
    config.fit_image = {40, true};

    const auto table =
        pipeline::run_sweep(config, {6e-3, 6e-3}, temp_dir("sweep_repeat"), 2);
    REQUIRE(table.rows.size() == 2);
    REQUIRE(table.rows[0].error.empty());
    REQUIRE(table.rows[1].error.empty());
    // distinct seeds, same physics: widths agree to a few percent
    CHECK(table.rows[0].sigma_x_px ==
          doctest::Approx(table.rows[1].sigma_x_px).epsilon(0.10));
}
