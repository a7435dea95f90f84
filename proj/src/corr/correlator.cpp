#include "biphoton/corr/correlator.hpp"

#include <algorithm>
#include <cmath>
#include <complex>

#include "biphoton/core/errors.hpp"
#include "biphoton/core/parallel.hpp"
#include "biphoton/corr/fft2d.hpp"

namespace biphoton::corr {

using core::CorrelationMap;
using core::Frame;
using core::MapKind;
using core::Stack;
using core::ValidationError;

double RealGrid::sum() const {
    double s = 0.0;
    for (double v : values) s += v;
    return s;
}

void CorrelationJob::validate(int frame_width, int frame_height) const {
    if (background_lag < 0)
        throw ValidationError("CorrelationJob: background_lag must be >= 0");
    if (crop_size < 1 || crop_size % 2 == 0)
        throw ValidationError("CorrelationJob: crop_size must be odd and positive");
    if (crop_size > std::min(frame_width, frame_height))
        throw ValidationError("CorrelationJob: crop_size exceeds frame size");
}

Frame mean_projection(const Stack& stack) {
    if (stack.frames.empty()) throw ValidationError("mean_projection: empty stack");
    Frame mean = stack.frames.front();
    const std::size_t n = mean.values.size();
    for (std::size_t f = 1; f < stack.frames.size(); ++f) {
        const auto& v = stack.frames[f].values;
        if (v.size() != n) throw ValidationError("mean_projection: frame geometry mismatch");
        for (std::size_t i = 0; i < n; ++i) mean.values[i] += v[i];
    }
    const double inv = 1.0 / static_cast<double>(stack.frames.size());
    for (double& v : mean.values) v *= inv;
    return mean;
}

Frame subtract_mean(const Frame& frame, const Frame& mean) {
    if (frame.width != mean.width || frame.height != mean.height)
        throw ValidationError("subtract_mean: geometry mismatch");
    Frame out = frame;
    for (std::size_t i = 0; i < out.values.size(); ++i) out.values[i] -= mean.values[i];
    return out;
}

namespace {

/// Move the raw periodic origin to (width/2, height/2).
RealGrid recenter(const std::vector<double>& raw, int width, int height) {
    RealGrid grid;
    grid.width = width;
    grid.height = height;
    grid.values.resize(raw.size());
    const int cx = width / 2;
    const int cy = height / 2;
    for (int y = 0; y < height; ++y) {
        const int sy = (y + height - cy) % height;
        for (int x = 0; x < width; ++x) {
            const int sx = (x + width - cx) % width;
            grid.values[static_cast<std::size_t>(y) * width + x] =
                raw[static_cast<std::size_t>(sy) * width + sx];
        }
    }
    return grid;
}

enum class SpectrumOp { ModulusSquared, Square, ConjugateProduct, Product };

RealGrid transform_pair(const Frame& a, const Frame& b, SpectrumOp op) {
    a.validate();
    if (b.width != a.width || b.height != a.height)
        throw ValidationError("cross_correlate: geometry mismatch");
    const Fft2d fft(a.width, a.height);
    const std::size_t n = fft.size();
    std::vector<std::complex<double>> fa(n), fb(n), spec(n);
    fft.forward(a.values.data(), fa.data());
    switch (op) {
        case SpectrumOp::ModulusSquared:
            for (std::size_t i = 0; i < n; ++i) spec[i] = std::norm(fa[i]);
            break;
        case SpectrumOp::Square:
            for (std::size_t i = 0; i < n; ++i) spec[i] = fa[i] * fa[i];
            break;
        case SpectrumOp::ConjugateProduct:
            fft.forward(b.values.data(), fb.data());
            for (std::size_t i = 0; i < n; ++i) spec[i] = std::conj(fa[i]) * fb[i];
            break;
        case SpectrumOp::Product:
            fft.forward(b.values.data(), fb.data());
            for (std::size_t i = 0; i < n; ++i) spec[i] = fa[i] * fb[i];
            break;
    }
    std::vector<double> raw(n);
    fft.inverse_real(spec.data(), raw.data());
    return recenter(raw, a.width, a.height);
}

} // namespace

RealGrid autocorrelate(const Frame& residual) {
    return transform_pair(residual, residual, SpectrumOp::ModulusSquared);
}

RealGrid autoconvolve(const Frame& residual) {
    return transform_pair(residual, residual, SpectrumOp::Square);
}

RealGrid cross_correlate(const Frame& a, const Frame& b) {
    return transform_pair(a, b, SpectrumOp::ConjugateProduct);
}

bool StackSource::next(Frame& out) {
    if (index_ >= stack_->size()) return false;
    out = stack_->frames[index_++];
    return true;
}

namespace {

Frame streamed_mean(FrameSource& source) {
    source.reset();
    Frame frame;
    if (!source.next(frame)) throw ValidationError("accumulate: empty stack");
    Frame mean = frame;
    std::size_t count = 1;
    while (source.next(frame)) {
        if (frame.width != mean.width || frame.height != mean.height)
            throw ValidationError("accumulate: frame geometry mismatch");
        for (std::size_t i = 0; i < mean.values.size(); ++i) mean.values[i] += frame.values[i];
        ++count;
    }
    const double inv = 1.0 / static_cast<double>(count);
    for (double& v : mean.values) v *= inv;
    return mean;
}

CorrelationMap crop_to_map(const std::vector<double>& raw, int width, int height,
                           const CorrelationJob& job, MapKind kind, core::Plane plane,
                           long frames_used, long frames_background) {
    const RealGrid full = recenter(raw, width, height);
    CorrelationMap map;
    map.size = job.crop_size;
    map.kind = kind;
    map.plane = plane;
    map.frames_used = frames_used;
    map.frames_background = frames_background;
    map.values.resize(static_cast<std::size_t>(job.crop_size) * job.crop_size);
    const int half = (job.crop_size - 1) / 2;
    const int cx = width / 2;
    const int cy = height / 2;
    for (int dy = -half; dy <= half; ++dy)
        for (int dx = -half; dx <= half; ++dx)
            map.at(dx, dy) = full.at(cx + dx, cy + dy);
    return map;
}

} // namespace

AccumulationResult accumulate(FrameSource& source, const CorrelationJob& job, int threads) {
    const int width = source.width();
    const int height = source.height();
    job.validate(width, height);
    const std::size_t n_frames = source.frame_count();
    const auto lag = static_cast<std::size_t>(job.background_lag);
    if (n_frames <= lag)
        throw ValidationError("accumulate: stack too short for background lag");

    const Frame mean = streamed_mean(source);
    const bool image_mode = job.mode == CorrelationJob::Mode::ImageCorrelation;

    const Fft2d fft(width, height);
    const std::size_t n = fft.size();
    std::vector<std::complex<double>> acc_signal(n, {0.0, 0.0});
    std::vector<std::complex<double>> acc_background(n, {0.0, 0.0});

    // Ring of the last `lag` spectra so each frame is transformed once.
    std::vector<std::vector<std::complex<double>>> ring(
        std::max<std::size_t>(lag, 1), std::vector<std::complex<double>>(lag > 0 ? n : 0));

    const int workers = core::resolve_threads(threads);
    const std::size_t block = std::max<std::size_t>(static_cast<std::size_t>(workers) * 4, 8);
    std::vector<Frame> block_frames(block);
    std::vector<std::vector<std::complex<double>>> block_spectra(
        block, std::vector<std::complex<double>>(n));

    source.reset();
    std::size_t frame_index = 0;
    while (frame_index < n_frames) {
        std::size_t loaded = 0;
        while (loaded < block && source.next(block_frames[loaded])) ++loaded;
        if (loaded == 0) break;

        core::parallel_for(0, loaded, threads, [&](std::size_t i) {
            Frame residual = subtract_mean(block_frames[i], mean);
            fft.forward(residual.values.data(), block_spectra[i].data());
        });

        // Single-writer reduction in frame-index order.
        for (std::size_t i = 0; i < loaded; ++i, ++frame_index) {
            const auto& f = block_spectra[i];
            if (image_mode) {
                for (std::size_t k = 0; k < n; ++k) acc_signal[k] += std::norm(f[k]);
            } else {
                for (std::size_t k = 0; k < n; ++k) acc_signal[k] += f[k] * f[k];
            }
            if (lag > 0 && frame_index >= lag) {
                const auto& past = ring[(frame_index - lag) % lag];
                if (image_mode) {
                    // Real part of conj(F_n) * F_{n+lag}: averages the two
                    // frame orderings, keeping the map point-symmetric.
                    for (std::size_t k = 0; k < n; ++k)
                        acc_background[k] += (std::conj(past[k]) * f[k]).real();
                } else {
                    for (std::size_t k = 0; k < n; ++k) acc_background[k] += past[k] * f[k];
                }
            }
            if (lag > 0) ring[frame_index % lag] = f;
        }
    }

    const auto frames_signal = static_cast<long>(n_frames);
    const auto frames_background = lag > 0 ? static_cast<long>(n_frames - lag) : 0L;

    const MapKind kind = image_mode ? MapKind::Autocorrelation : MapKind::Autoconvolution;
    AccumulationResult out;

    std::vector<std::complex<double>> spec(n);
    std::vector<double> raw(n);
    for (std::size_t k = 0; k < n; ++k) {
        spec[k] = acc_signal[k] / static_cast<double>(frames_signal);
        if (frames_background > 0)
            spec[k] -= acc_background[k] / static_cast<double>(frames_background);
    }
    fft.inverse_real(spec.data(), raw.data());
    out.map = crop_to_map(raw, width, height, job, kind, source.plane(), frames_signal,
                          frames_background);

    if (frames_background > 0) {
        for (std::size_t k = 0; k < n; ++k)
            spec[k] = acc_background[k] / static_cast<double>(frames_background);
        fft.inverse_real(spec.data(), raw.data());
        out.background = crop_to_map(raw, width, height, job, MapKind::CrossBackground,
                                     source.plane(), frames_signal, frames_background);
    }
    return out;
}

AccumulationResult accumulate(const Stack& stack, const CorrelationJob& job, int threads) {
    StackSource source(stack);
    return accumulate(source, job, threads);
}

} // namespace biphoton::corr
