#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace memheat {

/// Number of workers to use when the caller asked for `requested` (<= 0 means
/// one per hardware thread).
inline int resolve_jobs(int requested) {
    if (requested > 0) return requested;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

/// Calls f(i) for i in [0, n) on up to `jobs` threads. Indices are handed out
/// in a fixed stride so the assignment does not depend on timing; results
/// written to per-index slots are therefore scheduling independent. The first
/// exception thrown by any call is rethrown after all workers finish.
template <class F>
void parallel_for(std::size_t n, int jobs, F&& f) {
    const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(resolve_jobs(jobs)), n);
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) f(i);
        return;
    }
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            try {
                for (std::size_t i = w; i < n; i += workers) f(i);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!error) error = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

}  // namespace memheat
