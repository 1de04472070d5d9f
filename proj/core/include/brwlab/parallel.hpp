#pragma once

#include <cstddef>
#include <exception>
#include <functional>
#include <thread>
#include <vector>

namespace brwlab {

/// Runs fn(unit) for unit in [0, units) on `workers` threads. Worker w takes
/// units w, w + workers, ... so the assignment never depends on timing. The
/// first exception (lowest worker index) is rethrown after all threads join.
inline void parallel_for_static(std::size_t units, int workers, const std::function<void(std::size_t)>& fn) {
    if (workers <= 1 || units <= 1) {
        for (std::size_t u = 0; u < units; ++u) fn(u);
        return;
    }
    const auto w_count = static_cast<std::size_t>(workers);
    std::vector<std::exception_ptr> errors(w_count);
    std::vector<std::thread> threads;
    threads.reserve(w_count);
    for (std::size_t w = 0; w < w_count; ++w) {
        threads.emplace_back([&, w] {
            try {
                for (std::size_t u = w; u < units; u += w_count) fn(u);
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    }
    for (auto& t : threads) t.join();
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

}  // namespace brwlab
