#pragma once

#include <algorithm>
#include <cstdlib>
#include <exception>
#include <string>
#include <thread>
#include <vector>

namespace nullgeo {

/// Worker count: NULLGEO_THREADS if set (>= 1), else the hardware count.
inline unsigned thread_cap() {
    unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("NULLGEO_THREADS")) {
        try {
            const long v = std::stol(env);
            if (v >= 1) return static_cast<unsigned>(v);
        } catch (const std::exception&) {
        }
    }
    return hw;
}

/// Runs f(i) for i in [0, n) on up to thread_cap() threads. Each index is
/// handled by exactly one call, so results written per index do not depend
/// on the thread count. If calls throw, the exception from the lowest index
/// is rethrown after all workers finish.
template <class F>
void parallel_for(std::size_t n, F&& f) {
    if (n == 0) return;
    const unsigned workers = static_cast<unsigned>(std::min<std::size_t>(thread_cap(), n));
    std::vector<std::exception_ptr> errors(n);
    auto run = [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            try {
                f(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    if (workers <= 1) {
        run(0, n);
    } else {
        std::vector<std::thread> pool;
        const std::size_t chunk = (n + workers - 1) / workers;
        for (unsigned w = 0; w < workers; ++w) {
            const std::size_t b = w * chunk;
            const std::size_t e = std::min(n, b + chunk);
            if (b < e) pool.emplace_back(run, b, e);
        }
        for (auto& t : pool) t.join();
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

}  // namespace nullgeo
