#pragma once

// Brute-force reference implementations used to check the transform-based
// pipeline. These deliberately avoid the library's FFT and recentering code:
// every value is a direct O(N^4) sum over pixels at a signed displacement.

#include <cmath>
#include <random>
#include <vector>

#include "biphoton/core/types.hpp"

namespace oracles {

using biphoton::core::Frame;

inline int wrap(int i, int n) {
    int r = i % n;
    return r < 0 ? r + n : r;
}

/// C(dx, dy) = sum_{x,y} f(x, y) * f(x+dx, y+dy), periodic.
inline double autocorr_cell(const Frame& f, int dx, int dy) {
    double s = 0.0;
    for (int y = 0; y < f.height; ++y)
        for (int x = 0; x < f.width; ++x)
            s += f.at(x, y) * f.at(wrap(x + dx, f.width), wrap(y + dy, f.height));
    return s;
}

/// V(sx, sy) = sum_{x,y} f(x, y) * f(sx-x, sy-y), periodic.
inline double autoconv_cell(const Frame& f, int sx, int sy) {
    double s = 0.0;
    for (int y = 0; y < f.height; ++y)
        for (int x = 0; x < f.width; ++x)
            s += f.at(x, y) * f.at(wrap(sx - x, f.width), wrap(sy - y, f.height));
    return s;
}

/// X(dx, dy) = sum_{x,y} a(x, y) * b(x+dx, y+dy), periodic.
inline double crosscorr_cell(const Frame& a, const Frame& b, int dx, int dy) {
    double s = 0.0;
    for (int y = 0; y < a.height; ++y)
        for (int x = 0; x < a.width; ++x)
            s += a.at(x, y) * b.at(wrap(x + dx, a.width), wrap(y + dy, a.height));
    return s;
}

/// Cross-convolution sum_x a(x) * b(s - x), periodic (pupil background term).
inline double crossconv_cell(const Frame& a, const Frame& b, int sx, int sy) {
    double s = 0.0;
    for (int y = 0; y < a.height; ++y)
        for (int x = 0; x < a.width; ++x)
            s += a.at(x, y) * b.at(wrap(sx - x, a.width), wrap(sy - y, a.height));
    return s;
}

inline Frame random_frame(int width, int height, std::mt19937_64& rng,
                          double lo = -1.0, double hi = 1.0) {
    std::uniform_real_distribution<double> dist(lo, hi);
    Frame f;
    f.width = width;
    f.height = height;
    f.values.resize(static_cast<std::size_t>(width) * height);
    for (double& v : f.values) v = dist(rng);
    return f;
}

inline double frame_sum(const Frame& f) {
    double s = 0.0;
    for (double v : f.values) s += v;
    return s;
}

/// Synthetic noiseless Gaussian-peak map for fit tests.
inline biphoton::core::CorrelationMap synthetic_gaussian_map(
    int size, double amplitude, double cx, double cy, double sx, double sy, double offset,
    biphoton::core::MapKind kind = biphoton::core::MapKind::Autocorrelation) {
    biphoton::core::CorrelationMap map;
    map.size = size;
    map.kind = kind;
    map.frames_used = 1;
    map.values.resize(static_cast<std::size_t>(size) * size);
    const int c = size / 2;
    for (int y = 0; y < size; ++y) {
        for (int x = 0; x < size; ++x) {
            const double ux = (x - c - cx) / sx;
            const double uy = (y - c - cy) / sy;
            map.values[static_cast<std::size_t>(y) * size + x] =
                amplitude * std::exp(-0.5 * (ux * ux + uy * uy)) + offset;
        }
    }
    return map;
}

} // namespace oracles
