#pragma once

#include <cstddef>
#include <functional>
#include <thread>
#include <vector>

namespace biphoton::core {

/// Number of worker threads for a request; 0 selects the hardware count.
inline int resolve_threads(int requested) {
    if (requested > 0) return requested;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? static_cast<int>(hw) : 1;
}

/// Run fn(i) for i in [begin, end) on `threads` workers with static
/// contiguous chunking. Results must be written to disjoint slots so the
/// outcome is independent of scheduling.
inline void parallel_for(std::size_t begin, std::size_t end, int threads,
                         const std::function<void(std::size_t)>& fn) {
    const std::size_t n = end > begin ? end - begin : 0;
    const int workers = resolve_threads(threads);
    if (n == 0) return;
    if (workers <= 1 || n == 1) {
        for (std::size_t i = begin; i < end; ++i) fn(i);
        return;
    }
    const std::size_t chunk = (n + workers - 1) / workers;
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) {
        const std::size_t lo = begin + chunk * static_cast<std::size_t>(w);
        if (lo >= end) break;
        const std::size_t hi = lo + chunk < end ? lo + chunk : end;
        pool.emplace_back([lo, hi, &fn] {
            for (std::size_t i = lo; i < hi; ++i) fn(i);
        });
    }
    for (auto& t : pool) t.join();
}

} // namespace biphoton::core
