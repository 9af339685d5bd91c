#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <thread>
#include <vector>

namespace gapdiamond {

// Runs body(i) for i in [0, n) on up to `jobs` threads. Each index is visited
// exactly once; callers write into pre-sized slots so the result does not
// depend on scheduling. body must not throw.
template <class Body>
void parallel_for(std::size_t n, unsigned jobs, Body&& body) {
    const std::size_t workers = std::min<std::size_t>(std::max(1u, jobs), n);
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w)
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) body(i);
        });
}

} // namespace gapdiamond
