#include "biphoton/corr/fft2d.hpp"

#include <fftw3.h>

#include <mutex>

#include "biphoton/core/errors.hpp"

namespace biphoton::corr {

namespace {
std::mutex& plan_mutex() {
    static std::mutex m;
    return m;
}
} // namespace

Fft2d::Fft2d(int width, int height) : width_(width), height_(height) {
    if (width < 1 || height < 1)
        throw core::ValidationError("Fft2d: width and height must be >= 1");
    std::lock_guard<std::mutex> lock(plan_mutex());
    // FFTW_UNALIGNED lets the plans run on arbitrary caller buffers; with
    // FFTW_ESTIMATE the plan choice is deterministic.
    plan_forward_ = fftw_plan_dft_2d(height_, width_, nullptr, nullptr, FFTW_FORWARD,
                                     FFTW_ESTIMATE | FFTW_UNALIGNED);
    plan_inverse_ = fftw_plan_dft_2d(height_, width_, nullptr, nullptr, FFTW_BACKWARD,
                                     FFTW_ESTIMATE | FFTW_UNALIGNED);
    if (!plan_forward_ || !plan_inverse_)
        throw core::NumericalError("Fft2d: FFTW plan creation failed");
}

Fft2d::~Fft2d() {
    std::lock_guard<std::mutex> lock(plan_mutex());
    if (plan_forward_) fftw_destroy_plan(static_cast<fftw_plan>(plan_forward_));
    if (plan_inverse_) fftw_destroy_plan(static_cast<fftw_plan>(plan_inverse_));
}

void Fft2d::forward(const double* in, std::complex<double>* out) const {
    const std::size_t n = size();
    std::vector<std::complex<double>> tmp(n);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = {in[i], 0.0};
    fftw_execute_dft(static_cast<fftw_plan>(plan_forward_),
                     reinterpret_cast<fftw_complex*>(tmp.data()),
                     reinterpret_cast<fftw_complex*>(out));
}

void Fft2d::inverse_real(const std::complex<double>* in, double* out) const {
    const std::size_t n = size();
    std::vector<std::complex<double>> tmp(n);
    fftw_execute_dft(static_cast<fftw_plan>(plan_inverse_),
                     const_cast<fftw_complex*>(reinterpret_cast<const fftw_complex*>(in)),
                     reinterpret_cast<fftw_complex*>(tmp.data()));
    const double scale = 1.0 / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = tmp[i].real() * scale;
}

} // namespace biphoton::corr
