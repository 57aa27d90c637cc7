#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace qdgrasp {

/// Runs body(i) for i in [0, n) on `workers` threads.
///
/// Indices are assigned statically (worker w handles w, w+workers, ...), so results that
/// depend only on i are identical for every worker count. The first exception thrown by
/// any body is rethrown on the calling thread after all workers join.
template <typename Body>
void parallel_for(std::size_t n, std::size_t workers, Body&& body)
{
    workers = std::max<std::size_t>(1, std::min(workers, n));
    if (workers == 1) {
        for (std::size_t i = 0; i < n; ++i)
            body(i);
        return;
    }

    std::exception_ptr error;
    std::mutex error_mutex;
    {
        std::vector<std::jthread> threads;
        threads.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w) {
            threads.emplace_back([&, w] {
                try {
                    for (std::size_t i = w; i < n; i += workers)
                        body(i);
                }
                catch (...) {
                    std::lock_guard lock(error_mutex);
                    if (!error)
                        error = std::current_exception();
                }
            });
        }
    }
    if (error)
        std::rethrow_exception(error);
}

} // namespace qdgrasp
