// parallel.hpp: index-parallel loop over independent tasks.

#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace mlz {

inline std::size_t default_workers() {
    return std::max<std::size_t>(1, std::thread::hardware_concurrency());
}

// Calls fn(i) for every i in [0, count). Each index runs exactly once;
// results must go to per-index slots. Returns the exception thrown for
// each index (null when it succeeded).
template <class Fn>
std::vector<std::exception_ptr> parallel_for(std::size_t count, Fn&& fn,
                                             std::size_t workers = default_workers()) {
    std::vector<std::exception_ptr> errors(count);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < count; i = next++) {
            try {
                fn(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    workers = std::clamp<std::size_t>(workers, 1, std::max<std::size_t>(count, 1));
    if (workers == 1) {
        worker();
        return errors;
    }
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
    pool.clear(); // joins
    return errors;
}

} // namespace mlz
