#pragma once

#include <exception>
#include <thread>
#include <vector>

namespace twoscale {

/// Runs fn(i) for i in [0, count) on up to `workers` threads.  Index i is
/// always handled by thread i % workers, so results written per index do not
/// depend on the worker count.  The exception from the lowest failing index
/// is rethrown.
template <class Fn>
void parallel_for(int count, int workers, Fn&& fn) {
    if (workers <= 1 || count <= 1) {
        for (int i = 0; i < count; ++i) fn(i);
        return;
    }
    if (workers > count) workers = count;
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(count));
    {
        std::vector<std::jthread> pool;
        pool.reserve(static_cast<std::size_t>(workers));
        for (int t = 0; t < workers; ++t) {
            pool.emplace_back([&, t] {
                for (int i = t; i < count; i += workers) {
                    try {
                        fn(i);
                    } catch (...) {
                        errors[static_cast<std::size_t>(i)] = std::current_exception();
                    }
                }
            });
        }
    }
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

}  // namespace twoscale
