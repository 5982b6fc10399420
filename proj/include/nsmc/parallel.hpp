#pragma once

#include <cstddef>
#include <exception>
#include <vector>

#include <omp.h>

namespace nsmc {

/// Runs fn(i) for i in [0, n) across OpenMP threads. Exceptions cannot leave
/// an OpenMP region, so they are captured per index and the one with the
/// lowest index is rethrown afterwards.
template <class Fn>
void parallel_for(std::size_t n, Fn&& fn) {
    std::vector<std::exception_ptr> errors(n);
#pragma omp parallel for schedule(dynamic, 1)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i) {
        try {
            fn(static_cast<std::size_t>(i));
        } catch (...) {
            errors[static_cast<std::size_t>(i)] = std::current_exception();
        }
    }
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

/// Sets the OpenMP team size for subsequent parallel regions (<= 0 keeps the default).
inline void set_thread_count(int threads) {
    if (threads > 0) omp_set_num_threads(threads);
}

} // namespace nsmc
