#pragma once

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace dmw {

// Worker count: hardware concurrency, capped by WORKBENCH_THREADS when set.
unsigned worker_count();

// Runs body(i) for every i in [0, count). Each index is handled exactly once, so results
// written to per-index slots do not depend on how many threads ran.
template <class Body>
void parallel_for(std::size_t count, Body&& body) {
    const std::size_t workers = std::min<std::size_t>(worker_count(), count);
    if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i) body(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto worker = [&] {
        for (std::size_t i = next++; i < count; i = next++) {
            try {
                body(i);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!error) error = std::current_exception();
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

std::uint64_t mix64(std::uint64_t x) noexcept;

// Counter-based uniform draw in (0, 1) keyed by (seed, stream, index).
double uniform01(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) noexcept;

}  // namespace dmw
