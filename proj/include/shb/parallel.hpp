#pragma once

#include <cstddef>
#include <exception>
#include <vector>

namespace shb {

enum class Execution { serial, parallel };

/// Calls fn(i) for i in [0, n). The parallel path distributes indices over
/// OpenMP threads; each index must write only to its own output slot.
/// The first exception (by index) is rethrown after the loop.
template <class Fn>
void for_each_index(std::size_t n, Execution exec, Fn&& fn) {
    std::vector<std::exception_ptr> errors(n);
    if (exec == Execution::serial) {
        for (std::size_t i = 0; i < n; ++i) {
            try {
                fn(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    } else {
        const long long count = static_cast<long long>(n);
#pragma omp parallel for schedule(dynamic, 1)
        for (long long i = 0; i < count; ++i) {
            try {
                fn(static_cast<std::size_t>(i));
            } catch (...) {
                errors[static_cast<std::size_t>(i)] = std::current_exception();
            }
        }
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

} // namespace shb
