#pragma once

#include <optional>
#include <vector>

#include "biphoton/core/types.hpp"

namespace biphoton::corr {

/// Full-frame real grid with the zero displacement/sum re-centered to
/// (width/2, height/2); the raw transform output lives at periodic indices.
struct RealGrid {
    int width = 0;
    int height = 0;
    std::vector<double> values;

    double at(int x, int y) const { return values[static_cast<std::size_t>(y) * width + x]; }
    double& at(int x, int y) { return values[static_cast<std::size_t>(y) * width + x]; }

    /// Value at signed displacement (dx, dy) from the centered origin.
    double at_offset(int dx, int dy) const { return at(width / 2 + dx, height / 2 + dy); }

    double sum() const;
};

/// Specification of one accumulation run over a stack.
struct CorrelationJob {
    enum class Mode { ImageCorrelation, PupilConvolution };

    Mode mode = Mode::ImageCorrelation;
    int background_lag = 2;  // 0 disables background subtraction
    int crop_size = 161;     // odd, output window side

    void validate(int frame_width, int frame_height) const;
};

/// Pixel-wise arithmetic mean over all frames of the stack.
core::Frame mean_projection(const core::Stack& stack);

/// Element-wise difference frame - mean.
core::Frame subtract_mean(const core::Frame& frame, const core::Frame& mean);

/// Periodic autocorrelation C(d) = sum_x f(x) f(x+d), via FFT -> |.|^2 ->
/// inverse FFT, re-centered.
RealGrid autocorrelate(const core::Frame& residual);

/// Periodic autoconvolution V(s) = sum_x f(x) f(s-x), via FFT -> square ->
/// inverse FFT, re-centered.
RealGrid autoconvolve(const core::Frame& residual);

/// Periodic cross-correlation X(d) = sum_x a(x) b(x+d), re-centered.
/// cross_correlate(f, f) equals autocorrelate(f).
RealGrid cross_correlate(const core::Frame& a, const core::Frame& b);

/// Sequential source of frames so a stack larger than memory can stream
/// through accumulate. Two passes are made (mean, then maps).
class FrameSource {
public:
    virtual ~FrameSource() = default;
    virtual std::size_t frame_count() const = 0;
    virtual int width() const = 0;
    virtual int height() const = 0;
    virtual core::Plane plane() const = 0;
    /// Restart iteration from the first frame.
    virtual void reset() = 0;
    /// Fill `out` with the next frame; false when exhausted.
    virtual bool next(core::Frame& out) = 0;
};

/// Adapter over an in-memory stack.
class StackSource final : public FrameSource {
public:
    explicit StackSource(const core::Stack& stack) : stack_(&stack) {}
    std::size_t frame_count() const override { return stack_->size(); }
    int width() const override { return stack_->width(); }
    int height() const override { return stack_->height(); }
    core::Plane plane() const override { return stack_->plane(); }
    void reset() override { index_ = 0; }
    bool next(core::Frame& out) override;

private:
    const core::Stack* stack_;
    std::size_t index_ = 0;
};

struct AccumulationResult {
    core::CorrelationMap map;  // background-subtracted when lag > 0
    std::optional<core::CorrelationMap> background;  // lag-shifted estimate, lag > 0 only
};

/// Stream a stack into an averaged correlation (or anticorrelation) map with
/// mean-projection subtraction and optional lag-shifted background removal.
///
/// Accumulation is carried in the frequency domain in double precision;
/// per-frame spectra are combined in frame-index order, so the result is
/// bit-identical for any thread count. The image-plane background estimate is
/// symmetrized over the two frame orderings, which keeps the subtracted map
/// exactly point-symmetric.
AccumulationResult accumulate(FrameSource& source, const CorrelationJob& job, int threads = 0);

/// Convenience overload for in-memory stacks.
AccumulationResult accumulate(const core::Stack& stack, const CorrelationJob& job,
                              int threads = 0);

} // namespace biphoton::corr
