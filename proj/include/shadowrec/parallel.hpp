#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace shadowrec {

/// Runs body(i) for i in [0, n) on up to `threads` workers using static
/// contiguous chunks. Each index is processed exactly once, so results that
/// depend only on i are independent of the worker count. The first exception
/// thrown (lowest chunk) is rethrown on the calling thread.
template <typename Body>
void parallel_for(std::size_t n, std::size_t threads, Body&& body) {
    if (n == 0) {
        return;
    }
    const std::size_t workers = std::clamp<std::size_t>(threads, 1, n);
    if (workers == 1) {
        for (std::size_t i = 0; i < n; ++i) {
            body(i);
        }
        return;
    }

    std::vector<std::exception_ptr> errors(workers);
    {
        std::vector<std::jthread> pool;
        pool.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w) {
            const std::size_t begin = n * w / workers;
            const std::size_t end = n * (w + 1) / workers;
            pool.emplace_back([&, w, begin, end] {
                try {
                    for (std::size_t i = begin; i < end; ++i) {
                        body(i);
                    }
                } catch (...) {
                    errors[w] = std::current_exception();
                }
            });
        }
    }
    for (auto& error : errors) {
        if (error) {
            std::rethrow_exception(error);
        }
    }
}

}  // namespace shadowrec
