#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace ifpt {

/// Worker count: IFPT_THREADS when set to a positive integer, otherwise the
/// hardware concurrency.
inline unsigned worker_count() {
    if (const char* env = std::getenv("IFPT_THREADS")) {
        try {
            const long v = std::stol(env);
            if (v > 0) {
                return static_cast<unsigned>(v);
            }
        } catch (const std::exception&) {
        }
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

/// Calls body(chunk, lo, hi) over [0, n) split into `chunks` fixed ranges. The split
/// does not depend on the worker count, so per-chunk results are reproducible.
template <class Body>
void parallel_chunks(std::size_t n, std::size_t chunks, Body&& body) {
    chunks = std::max<std::size_t>(1, std::min(chunks, n));
    if (n == 0) {
        return;
    }
    auto range = [n, chunks](std::size_t c) {
        return std::pair<std::size_t, std::size_t>{n * c / chunks, n * (c + 1) / chunks};
    };
    const unsigned workers = std::min<std::size_t>(worker_count(), chunks);
    if (workers <= 1) {
        for (std::size_t c = 0; c < chunks; ++c) {
            auto [lo, hi] = range(c);
            body(c, lo, hi);
        }
        return;
    }
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            try {
                for (std::size_t c = w; c < chunks; c += workers) {
                    auto [lo, hi] = range(c);
                    body(c, lo, hi);
                }
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) {
                    failure = std::current_exception();
                }
            }
        });
    }
    for (auto& t : pool) {
        t.join();
    }
    if (failure) {
        std::rethrow_exception(failure);
    }
}

/// Element-wise parallel loop; body(i) must only write state owned by i.
template <class Body>
void parallel_for(std::size_t n, Body&& body) {
    const std::size_t chunks = std::min<std::size_t>(n, 64);
    parallel_chunks(n, chunks, [&](std::size_t, std::size_t lo, std::size_t hi) {
        for (std::size_t i = lo; i < hi; ++i) {
            body(i);
        }
    });
}

}  // namespace ifpt
