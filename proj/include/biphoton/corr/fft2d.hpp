#pragma once

#include <complex>
#include <vector>

namespace biphoton::corr {

/// Double-precision 2D DFT of a fixed width x height geometry, backed by
/// FFTW. Plans are created once per instance under a global lock (FFTW plan
/// creation is not thread-safe); execution on caller-owned buffers is
/// thread-safe and bit-deterministic for identical input.
class Fft2d {
public:
    Fft2d(int width, int height);
    ~Fft2d();

    Fft2d(const Fft2d&) = delete;
    Fft2d& operator=(const Fft2d&) = delete;

    int width() const { return width_; }
    int height() const { return height_; }
    std::size_t size() const { return static_cast<std::size_t>(width_) * height_; }

    /// out[k] = sum_x in[x] exp(-2*pi*i*k.x/N), row-major (y, x) layout.
    void forward(const double* in, std::complex<double>* out) const;

    /// Unnormalized inverse transform of a complex spectrum; the real part is
    /// written to out after division by width*height.
    void inverse_real(const std::complex<double>* in, double* out) const;

private:
    int width_;
    int height_;
    void* plan_forward_ = nullptr;
    void* plan_inverse_ = nullptr;
};

} // namespace biphoton::corr
