#pragma once

// Block-parallel index loop.  Work items write to preassigned slots, so the
// result is identical for any worker count.

#include <algorithm>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace nsl {

inline unsigned effective_threads(unsigned requested) {
    const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    return requested == 0 ? hw : std::min(requested, hw);
}

template <class Fn>
void parallel_for(std::size_t n, unsigned threads, Fn&& fn) {
    const unsigned nw = std::min<std::size_t>(effective_threads(threads), n ? n : 1);
    if (nw <= 1 || n < 2) {
        for (std::size_t i = 0; i < n; ++i)
            fn(i);
        return;
    }
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errs(nw);
    for (unsigned w = 0; w < nw; ++w) {
        pool.emplace_back([&, w] {
            try {
                for (std::size_t i = w; i < n; i += nw)
                    fn(i);
            } catch (...) {
                errs[w] = std::current_exception();
            }
        });
    }
    for (auto& t : pool)
        t.join();
    for (auto& e : errs)
        if (e)
            std::rethrow_exception(e);
}

} // namespace nsl
