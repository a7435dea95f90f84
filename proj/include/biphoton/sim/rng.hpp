#pragma once

#include <cstdint>
#include <random>

namespace biphoton::sim {

/// RNG substream domains. Streams are derived from (master_seed, domain,
/// index) so per-frame synthesis is independent of scheduling order.
enum class RngDomain : std::uint64_t {
    DriftChain = 0x1,
    PrnuMap = 0x2,
    Frame = 0x3,
};

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Deterministic substream engine keyed by (master seed, domain, index).
inline std::mt19937_64 make_stream(std::uint64_t master_seed, RngDomain domain,
                                   std::uint64_t index = 0) {
    std::uint64_t s = splitmix64(master_seed ^ static_cast<std::uint64_t>(domain));
    s = splitmix64(s + index);
    return std::mt19937_64(s);
}

inline double draw_normal(std::mt19937_64& rng, double mean, double sigma) {
    if (sigma == 0.0) return mean;
    std::normal_distribution<double> d(mean, sigma);
    return d(rng);
}

inline double draw_uniform01(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> d(0.0, 1.0);
    return d(rng);
}

inline long long draw_poisson(std::mt19937_64& rng, double mean) {
    if (mean <= 0.0) return 0;
    std::poisson_distribution<long long> d(mean);
    return d(rng);
}

} // namespace biphoton::sim
