#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace mpmab {

/// Runs fn(i) for i in [0, n) on up to `workers` threads. Work is claimed
/// dynamically; callers write results into slot i so output order never
/// depends on scheduling. The first exception thrown is rethrown.
template <typename Fn>
void parallel_for(std::size_t n, unsigned workers, Fn&& fn) {
    if (workers <= 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto body = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= n) return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!error) error = std::current_exception();
                next.store(n);
            }
        }
    };
    std::vector<std::jthread> pool;
    const auto count = std::min<std::size_t>(workers, n);
    pool.reserve(count);
    for (std::size_t w = 0; w < count; ++w) pool.emplace_back(body);
    pool.clear();
    if (error) std::rethrow_exception(error);
}

inline unsigned default_workers() { return std::max(1u, std::thread::hardware_concurrency()); }

}  // namespace mpmab
