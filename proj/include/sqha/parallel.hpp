#pragma once

#include <atomic>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace sqha {

// Index-based worker pool. Each index is processed exactly once and writes
// only to its own output slot, so results do not depend on the worker count.
// The first worker exception is rethrown on the caller thread.
inline void parallel_for(int n, int jobs, const std::function<void(int)>& fn) {
    if (n <= 0) return;
    if (jobs <= 0) jobs = static_cast<int>(std::thread::hardware_concurrency());
    jobs = std::min(jobs, n);
    if (jobs <= 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }

    std::atomic<int> next{0};
    std::atomic<bool> failed{false};
    std::exception_ptr first_error;
    std::mutex error_mutex;

    auto worker = [&] {
        while (!failed.load(std::memory_order_relaxed)) {
            const int i = next.fetch_add(1, std::memory_order_relaxed);
            if (i >= n) return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
                failed.store(true, std::memory_order_relaxed);
                return;
            }
        }
    };

    std::vector<std::thread> pool;
    pool.reserve(jobs);
    for (int t = 0; t < jobs; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
    if (first_error) std::rethrow_exception(first_error);
}

}  // namespace sqha
