#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "biphoton/core/geometry.hpp"
#include "biphoton/corr/correlator.hpp"
#include "biphoton/estimator/gaussian_fit.hpp"
#include "biphoton/sim/simulate.hpp"
#include "support/oracles.hpp"

using namespace biphoton;
using core::Frame;
using core::Plane;
using core::Stack;

namespace {

Frame make_frame(int width, int height, std::initializer_list<double> values) {
    Frame f;
    f.width = width;
    f.height = height;
    f.values = values;
    return f;
}

Stack stack_of(std::vector<Frame> frames) {
    Stack s;
    s.frames = std::move(frames);
    return s;
}

double max_abs(const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::fabs(x));
    return m;
}

/// Compare a transform-based grid against a brute-force per-cell oracle over
/// the full signed displacement range.
template <typename Oracle>
void check_against_oracle(const corr::RealGrid& grid, Oracle oracle, double rel_tol) {
    const int cx = grid.width / 2;
    const int cy = grid.height / 2;
    double scale = max_abs(grid.values);
    if (scale == 0.0) scale = 1.0;
    for (int dy = -cy; dy < grid.height - cy; ++dy)
        for (int dx = -cx; dx < grid.width - cx; ++dx)
            CHECK(grid.at_offset(dx, dy) == doctest::Approx(oracle(dx, dy)).scale(scale).epsilon(rel_tol));
}

} // namespace

TEST_CASE("mean projection") {
    const Frame a = make_frame(2, 2, {0, 2, 1, 3});
    const Frame b = make_frame(2, 2, {4, 2, 3, 1});

    const Frame single = corr::mean_projection(stack_of({a}));
    CHECK(single.values == a.values);

    const Frame mean = corr::mean_projection(stack_of({a, b}));
    CHECK(mean.values == std::vector<double>{2, 2, 2, 2});

    CHECK_THROWS_AS(corr::mean_projection(Stack{}), core::ValidationError);
}

TEST_CASE("mean projection of pure read noise shrinks as 1/sqrt(n)") {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> noise(0.0, 2.0);
    const int n_frames = 1000;
    std::vector<Frame> frames(n_frames);
    for (auto& f : frames) {
        f.width = 64;
        f.height = 64;
        f.values.resize(4096);
        for (double& v : f.values) v = noise(rng);
    }
    const Frame mean = corr::mean_projection(stack_of(std::move(frames)));
    double var = 0.0;
    for (double v : mean.values) var += v * v;
    var /= 4096.0;
    CHECK(std::sqrt(var) == doctest::Approx(2.0 / std::sqrt(1000.0)).epsilon(0.05));
}

TEST_CASE("subtract_mean") {
    const Frame f = make_frame(2, 2, {3, 1, 2, 0});
    const Frame m = make_frame(2, 2, {2, 2, 1, 1});
    const Frame r = corr::subtract_mean(f, m);
    CHECK(r.values == std::vector<double>{1, -1, 1, -1});

    CHECK(max_abs(corr::subtract_mean(f, f).values) == 0.0);

    const Frame wrong = make_frame(2, 3, {0, 0, 0, 0, 0, 0});
    CHECK_THROWS_AS(corr::subtract_mean(f, wrong), core::ValidationError);
}

TEST_CASE("residuals sum to zero over the stack") {
    std::mt19937_64 rng(4);
    std::vector<Frame> frames;
    for (int i = 0; i < 20; ++i) frames.push_back(oracles::random_frame(9, 7, rng, 0.0, 1000.0));
    const Stack stack = stack_of(frames);
    const Frame mean = corr::mean_projection(stack);

    std::vector<double> residual_sum(mean.values.size(), 0.0);
    double frame_max = 0.0;
    for (const Frame& f : stack.frames) {
        const Frame r = corr::subtract_mean(f, mean);
        for (std::size_t i = 0; i < r.values.size(); ++i) residual_sum[i] += r.values[i];
        frame_max = std::max(frame_max, max_abs(f.values));
    }
    CHECK(max_abs(residual_sum) < 1e-9 * frame_max);
}

TEST_CASE("autocorrelate: frozen 2x2 example") {
    const Frame f = make_frame(2, 2, {1, 2, 3, 4});
    const corr::RealGrid c = corr::autocorrelate(f);
    // center holds zero displacement; (0,-1) wraps to the one-row shift
    CHECK(c.at_offset(0, 0) == doctest::Approx(30.0).epsilon(1e-12));
    CHECK(c.at_offset(0, -1) == doctest::Approx(22.0).epsilon(1e-12));
    CHECK(c.at_offset(-1, 0) == doctest::Approx(28.0).epsilon(1e-12));
    CHECK(c.at_offset(-1, -1) == doctest::Approx(20.0).epsilon(1e-12));
    CHECK(c.sum() == doctest::Approx(100.0).epsilon(1e-12));  // (sum f)^2

    const Frame z = make_frame(4, 4, {0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0});
    CHECK(max_abs(corr::autocorrelate(z).values) < 1e-15);
}

TEST_CASE("autocorrelate: mean-subtracted frames sum to zero") {
    std::mt19937_64 rng(5);
    Frame f = oracles::random_frame(8, 8, rng, 0.0, 100.0);
    const double mean = oracles::frame_sum(f) / f.values.size();
    for (double& v : f.values) v -= mean;
    const corr::RealGrid c = corr::autocorrelate(f);
    CHECK(std::fabs(c.sum()) < 1e-9 * c.at_offset(0, 0));
}

TEST_CASE("autoconvolve: frozen 2x2 example and delta") {
    const Frame f = make_frame(2, 2, {1, 2, 3, 4});
    const corr::RealGrid v = corr::autoconvolve(f);
    // raw periodic indices (0,0)=30, (0,1)=28, (1,0)=22, (1,1)=20
    CHECK(v.at_offset(0, 0) == doctest::Approx(30.0).epsilon(1e-12));
    CHECK(v.at_offset(-1, 0) == doctest::Approx(28.0).epsilon(1e-12));
    CHECK(v.at_offset(0, -1) == doctest::Approx(22.0).epsilon(1e-12));
    CHECK(v.at_offset(-1, -1) == doctest::Approx(20.0).epsilon(1e-12));
    CHECK(v.sum() == doctest::Approx(100.0).epsilon(1e-12));

    // delta at (x,y) lands at (2x mod N, 2y mod N)
    Frame d;
    d.width = 5;
    d.height = 5;
    d.values.assign(25, 0.0);
    d.at(1, 2) = 1.0;
    const corr::RealGrid dv = corr::autoconvolve(d);
    for (int dy = -2; dy <= 2; ++dy)
        for (int dx = -2; dx <= 2; ++dx) {
            const double expected = oracles::autoconv_cell(d, dx, dy);
            CHECK(dv.at_offset(dx, dy) == doctest::Approx(expected).scale(1.0).epsilon(1e-12));
        }
    CHECK(dv.at_offset(2, -1) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("cross_correlate basics") {
    std::mt19937_64 rng(6);
    const Frame a = oracles::random_frame(8, 8, rng);
    const Frame b = oracles::random_frame(8, 8, rng);

    // a == b reduces to the autocorrelation, bit for bit
    Frame a_copy = a;
    const corr::RealGrid auto_map = corr::autocorrelate(a);
    const corr::RealGrid cross_same = corr::cross_correlate(a, a_copy);
    CHECK(auto_map.values == cross_same.values);

    Frame zero = a;
    for (double& v : zero.values) v = 0.0;
    CHECK(max_abs(corr::cross_correlate(a, zero).values) == 0.0);

    const corr::RealGrid x = corr::cross_correlate(a, b);
    check_against_oracle(x, [&](int dx, int dy) { return oracles::crosscorr_cell(a, b, dx, dy); },
                         1e-9);

    const Frame wrong = make_frame(4, 8, std::initializer_list<double>{});
    Frame w = wrong;
    w.values.assign(32, 0.0);
    CHECK_THROWS_AS(corr::cross_correlate(a, w), core::ValidationError);
}

TEST_CASE("transforms match brute-force oracles on random frames") {
    std::mt19937_64 rng(7);
    const std::vector<std::pair<int, int>> sizes = {{2, 2}, {3, 3}, {4, 6}, {7, 5}, {8, 8},
                                                    {9, 16}, {16, 16}};
    for (const auto& [w, h] : sizes) {
        const Frame f = oracles::random_frame(w, h, rng);
        const Frame g = oracles::random_frame(w, h, rng);
        check_against_oracle(corr::autocorrelate(f),
                             [&](int dx, int dy) { return oracles::autocorr_cell(f, dx, dy); },
                             1e-9);
        check_against_oracle(corr::autoconvolve(f),
                             [&](int dx, int dy) { return oracles::autoconv_cell(f, dx, dy); },
                             1e-9);
        check_against_oracle(corr::cross_correlate(f, g),
                             [&](int dx, int dy) { return oracles::crosscorr_cell(f, g, dx, dy); },
                             1e-9);

        // sum rules
        const double fs = oracles::frame_sum(f);
        CHECK(corr::autocorrelate(f).sum() == doctest::Approx(fs * fs).scale(
                  std::max(1.0, fs * fs)).epsilon(1e-9));
        CHECK(corr::autoconvolve(f).sum() == doctest::Approx(fs * fs).scale(
                  std::max(1.0, fs * fs)).epsilon(1e-9));
    }
}

TEST_CASE("autocorrelation maps are point symmetric") {
    std::mt19937_64 rng(8);
    for (const auto& [w, h] : std::vector<std::pair<int, int>>{{8, 8}, {7, 9}, {16, 12}}) {
        const Frame f = oracles::random_frame(w, h, rng);
        const corr::RealGrid c = corr::autocorrelate(f);
        const double scale = max_abs(c.values);
        for (int dy = 0; dy < h; ++dy)
            for (int dx = 0; dx < w; ++dx) {
                const double a = c.values[static_cast<std::size_t>(dy) * w + dx];
                // reflect through the center cell, modulo the periodic wrap
                const int rx = oracles::wrap(2 * (w / 2) - dx, w);
                const int ry = oracles::wrap(2 * (h / 2) - dy, h);
                const double b = c.values[static_cast<std::size_t>(ry) * w + rx];
                CHECK(a == doctest::Approx(b).scale(scale).epsilon(1e-12));
            }
    }
}

namespace {

Stack random_stack(int n_frames, int w, int h, std::mt19937_64& rng) {
    std::vector<Frame> frames;
    for (int i = 0; i < n_frames; ++i) frames.push_back(oracles::random_frame(w, h, rng, 0.0, 50.0));
    return stack_of(std::move(frames));
}

} // namespace

TEST_CASE("accumulate: zero residual stack gives zero map") {
    std::mt19937_64 rng(9);
    const Frame f = oracles::random_frame(8, 8, rng, 0.0, 10.0);
    const Stack stack = stack_of({f, f, f, f, f});
    corr::CorrelationJob job;
    job.crop_size = 7;
    job.background_lag = 2;
    const auto result = corr::accumulate(stack, job);
    CHECK(max_abs(result.map.values) < 1e-12);
}

TEST_CASE("accumulate equals per-frame transform averages") {
    std::mt19937_64 rng(10);
    const Stack stack = random_stack(7, 8, 6, rng);
    const Frame mean = corr::mean_projection(stack);
    const int lag = 2;

    std::vector<Frame> residuals;
    for (const Frame& f : stack.frames) residuals.push_back(corr::subtract_mean(f, mean));

    corr::CorrelationJob job;
    job.mode = corr::CorrelationJob::Mode::ImageCorrelation;
    job.background_lag = lag;
    job.crop_size = 5;
    const auto result = corr::accumulate(stack, job);
    REQUIRE(result.background.has_value());

    const int n = static_cast<int>(stack.size());
    for (int dy = -2; dy <= 2; ++dy) {
        for (int dx = -2; dx <= 2; ++dx) {
            double sig = 0.0;
            for (const Frame& r : residuals) sig += oracles::autocorr_cell(r, dx, dy);
            sig /= n;
            double bg = 0.0;
            for (int t = 0; t + lag < n; ++t) {
                // symmetrized two-ordering background estimate
                bg += 0.5 * (oracles::crosscorr_cell(residuals[t], residuals[t + lag], dx, dy) +
                             oracles::crosscorr_cell(residuals[t + lag], residuals[t], dx, dy));
            }
            bg /= (n - lag);
            const double scale = std::max(1.0, max_abs(result.map.values));
            CHECK(result.map.at(dx, dy) == doctest::Approx(sig - bg).scale(scale).epsilon(1e-11));
            CHECK(result.background->at(dx, dy) == doctest::Approx(bg).scale(scale).epsilon(1e-11));
        }
    }

    // accumulated image maps stay point symmetric with background subtraction
    for (int dy = -2; dy <= 2; ++dy)
        for (int dx = -2; dx <= 2; ++dx)
            CHECK(result.map.at(dx, dy) ==
                  doctest::Approx(result.map.at(-dx, -dy))
                      .scale(std::max(1.0, max_abs(result.map.values)))
                      .epsilon(1e-12));
}

TEST_CASE("accumulate pupil mode equals per-frame convolution averages") {
    std::mt19937_64 rng(11);
    Stack stack = random_stack(6, 6, 6, rng);
    for (Frame& f : stack.frames) f.plane = Plane::Pupil;
    const Frame mean = corr::mean_projection(stack);
    const int lag = 1;

    std::vector<Frame> residuals;
    for (const Frame& f : stack.frames) residuals.push_back(corr::subtract_mean(f, mean));

    corr::CorrelationJob job;
    job.mode = corr::CorrelationJob::Mode::PupilConvolution;
    job.background_lag = lag;
    job.crop_size = 5;
    const auto result = corr::accumulate(stack, job);
    CHECK(result.map.kind == core::MapKind::Autoconvolution);
    CHECK(result.map.plane == Plane::Pupil);

    const int n = static_cast<int>(stack.size());
    for (int dy = -2; dy <= 2; ++dy) {
        for (int dx = -2; dx <= 2; ++dx) {
            double sig = 0.0;
            for (const Frame& r : residuals) sig += oracles::autoconv_cell(r, dx, dy);
            sig /= n;
            double bg = 0.0;
            for (int t = 0; t + lag < n; ++t)
                bg += oracles::crossconv_cell(residuals[t], residuals[t + lag], dx, dy);
            bg /= (n - lag);
            const double scale = std::max(1.0, max_abs(result.map.values));
            CHECK(result.map.at(dx, dy) == doctest::Approx(sig - bg).scale(scale).epsilon(1e-11));
        }
    }
}

TEST_CASE("accumulate validation") {
    std::mt19937_64 rng(12);
    const Stack stack = random_stack(3, 8, 8, rng);
    corr::CorrelationJob job;

    job.background_lag = 3;  // too short: need length > lag
    job.crop_size = 5;
    CHECK_THROWS_AS(corr::accumulate(stack, job), core::ValidationError);

    job.background_lag = 2;
    job.crop_size = 4;  // even
    CHECK_THROWS_AS(corr::accumulate(stack, job), core::ValidationError);

    job.crop_size = 9;  // larger than the frame
    CHECK_THROWS_AS(corr::accumulate(stack, job), core::ValidationError);

    job.background_lag = -1;
    job.crop_size = 5;
    CHECK_THROWS_AS(corr::accumulate(stack, job), core::ValidationError);
}

TEST_CASE("accumulate is thread-count invariant") {
    std::mt19937_64 rng(13);
    const Stack stack = random_stack(25, 16, 16, rng);
    corr::CorrelationJob job;
    job.background_lag = 2;
    job.crop_size = 15;
    const auto one = corr::accumulate(stack, job, 1);
    const auto four = corr::accumulate(stack, job, 4);
    CHECK(one.map.values == four.map.values);
    REQUIRE(one.background.has_value());
    CHECK(one.background->values == four.background->values);
}

TEST_CASE("accumulate is quadratic in residual scale") {
    std::mt19937_64 rng(14);
    Stack stack = random_stack(8, 8, 8, rng);
    corr::CorrelationJob job;
    job.background_lag = 2;
    job.crop_size = 7;
    const auto base = corr::accumulate(stack, job);

    const double k = 2.0;
    for (Frame& f : stack.frames)
        for (double& v : f.values) v *= k;
    const auto scaled = corr::accumulate(stack, job);
    for (std::size_t i = 0; i < base.map.values.size(); ++i)
        CHECK(scaled.map.values[i] ==
              doctest::Approx(k * k * base.map.values[i])
                  .scale(std::max(1.0, max_abs(base.map.values)))
                  .epsilon(1e-12));
}

TEST_CASE("simulated image stack: fitted peak variance matches the source model") {
    // clean camera, no background artifacts, lag 0
    sim::SourceConfig source;
    source.sigma_pump = 40e-6;
    source.sigma_pair = 10e-6;
    source.pairs_per_frame_mean = 40000;
    sim::OpticsSimConfig optics;
    optics.psf = {sim::PsfKind::GaussianOfSigma, 4e-6};
    optics.calibration.pupil_relay_magnification = 1.0;
    sim::CameraConfig camera;
    camera.width = 64;
    camera.height = 64;
    camera.qe = 0.9;
    camera.read_noise_sigma = 1.0;
    camera.offset = 100.0;

    auto [stack, gt] = sim::simulate_stack(source, optics, camera, 150, Plane::Image, 21, 2);
    corr::CorrelationJob job;
    job.background_lag = 0;
    job.crop_size = 63;
    const auto result = corr::accumulate(stack, job, 2);

    const auto region = estimator::default_fit_region(core::MapKind::Autocorrelation, 40);
    const auto cells = estimator::circular_mask(result.map, region);
    const auto fit = estimator::fit_gaussian2d(cells);
    REQUIRE(fit.converged);

    const double mag = core::image_magnification(optics.calibration);
    const double pitch = optics.calibration.pixel_pitch;
    const double expected_var =
        (mag * mag * source.sigma_pair * source.sigma_pair + 2.0 * 4e-6 * 4e-6) / (pitch * pitch);
    const double fitted_var = 0.5 * (fit.sigma_x * fit.sigma_x + fit.sigma_y * fit.sigma_y);
    CHECK(fitted_var == doctest::Approx(expected_var).epsilon(0.05));
}
