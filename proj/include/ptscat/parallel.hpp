#pragma once

// Deterministic static-partition parallel loop; results must be written to
// disjoint slots indexed by the loop variable.

#include <algorithm>
#include <exception>
#include <functional>
#include <thread>
#include <vector>

namespace ptscat {

inline int resolve_threads(int requested) {
    if (requested > 0) return requested;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

template <class Fn>
void parallel_for(int begin, int end, int threads, const Fn& fn) {
    const int count = end - begin;
    if (count <= 0) return;
    const int workers = std::min(resolve_threads(threads), count);
    if (workers <= 1) {
        for (int i = begin; i < end; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            try {
                for (int i = begin + w; i < end; i += workers) fn(i);
            } catch (...) {
                errors[static_cast<std::size_t>(w)] = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);
}

} // namespace ptscat
