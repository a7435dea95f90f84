#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "biphoton/core/errors.hpp"

namespace biphoton::core {

/// Which conjugate plane a frame was recorded in.
enum class Plane : std::uint8_t { Image = 0, Pupil = 1 };

inline const char* to_string(Plane p) { return p == Plane::Image ? "image" : "pupil"; }

/// One camera exposure: a real-valued pixel grid in camera output units (ADU).
/// Pixel (x, y) lives at values[y * width + x].
struct Frame {
    int width = 0;
    int height = 0;
    std::vector<double> values;
    Plane plane = Plane::Image;

    double& at(int x, int y) { return values[static_cast<std::size_t>(y) * width + x]; }
    double at(int x, int y) const { return values[static_cast<std::size_t>(y) * width + x]; }
    std::size_t pixel_count() const { return static_cast<std::size_t>(width) * height; }

    void validate() const {
        if (width < 2 || height < 2)
            throw ValidationError("Frame: width and height must be >= 2");
        if (values.size() != pixel_count())
            throw ValidationError("Frame: values size does not match width*height");
        for (double v : values)
            if (!std::isfinite(v))
                throw ValidationError("Frame: non-finite pixel value");
    }
};

/// Optical-geometry constants of the acquisition setup.
///
/// f1 is the collection lens, f2 the image relay, f3 the pupil relay.
/// pupil_relay_magnification is the iris-plane -> detector scale; it is a free
/// scalar because the relay's conjugate distances are not part of the model.
struct CalibrationConfig {
    double f1 = 0.150;                       // m
    double f2 = 0.250;                       // m
    double f3 = 0.057;                       // m
    double lambda = 520e-9;                  // m, detected SPDC band-pass center
    double pupil_relay_magnification = 1.0;  // dimensionless
    double pixel_pitch = 6.5e-6;             // m

    void validate() const {
        auto pos = [](double v, const char* name) {
            if (!(v > 0.0) || !std::isfinite(v))
                throw ValidationError(std::string("CalibrationConfig: ") + name +
                                      " must be strictly positive");
        };
        pos(f1, "f1");
        pos(f2, "f2");
        pos(f3, "f3");
        pos(lambda, "lambda");
        pos(pupil_relay_magnification, "pupil_relay_magnification");
        pos(pixel_pitch, "pixel_pitch");
        if (!std::isfinite(f2 / f1))
            throw ValidationError("CalibrationConfig: image magnification f2/f1 not finite");
    }
};

/// Ordered sequence of frames with shared geometry and provenance.
struct Stack {
    std::vector<Frame> frames;
    double pixel_pitch = 6.5e-6;  // m
    CalibrationConfig calibration;
    std::map<std::string, std::string> metadata;

    int width() const { return frames.empty() ? 0 : frames.front().width; }
    int height() const { return frames.empty() ? 0 : frames.front().height; }
    Plane plane() const { return frames.empty() ? Plane::Image : frames.front().plane; }
    std::size_t size() const { return frames.size(); }

    void validate() const {
        if (!(pixel_pitch > 0.0))
            throw ValidationError("Stack: pixel_pitch must be > 0");
        calibration.validate();
        if (frames.empty()) return;
        const Frame& first = frames.front();
        for (const Frame& f : frames) {
            f.validate();
            if (f.width != first.width || f.height != first.height || f.plane != first.plane)
                throw ValidationError("Stack: frames must share width, height and plane");
        }
    }
};

enum class MapKind : std::uint8_t { Autocorrelation = 0, Autoconvolution = 1, CrossBackground = 2 };

/// Centered square map over pixel displacement (image plane) or position sum
/// (pupil plane). size is odd; cell (size/2, size/2) is displacement/sum zero.
struct CorrelationMap {
    int size = 0;
    std::vector<double> values;  // values[(dy + size/2) * size + (dx + size/2)]
    MapKind kind = MapKind::Autocorrelation;
    long frames_used = 0;
    long frames_background = 0;
    Plane plane = Plane::Image;

    int center() const { return size / 2; }

    /// Value at signed displacement (dx, dy) from the center.
    double at(int dx, int dy) const {
        const int c = center();
        return values[static_cast<std::size_t>(dy + c) * size + (dx + c)];
    }
    double& at(int dx, int dy) {
        const int c = center();
        return values[static_cast<std::size_t>(dy + c) * size + (dx + c)];
    }

    void validate() const {
        if (size < 1 || size % 2 == 0)
            throw ValidationError("CorrelationMap: size must be odd and positive");
        if (values.size() != static_cast<std::size_t>(size) * size)
            throw ValidationError("CorrelationMap: values size mismatch");
    }
};

/// Result of the position/momentum inference-variance product test.
struct EprResult {
    double delta_x2 = 0.0;       // m^2, object plane
    double delta_p2 = 0.0;       // (hbar/m)^2
    double product_hbar2 = 0.0;  // dimensionless, in units of hbar^2
    double bound = 0.25;
    bool violated = false;
    double violation_factor = 0.0;  // bound / product
};

} // namespace biphoton::core
