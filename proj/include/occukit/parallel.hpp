#pragma once

#include <algorithm>
#include <cstddef>
#include <thread>
#include <vector>

namespace occukit {

// Splits [0, n) into contiguous chunks, one worker thread per chunk. Workers
// must only write to disjoint outputs indexed by their range, which keeps
// results identical for any thread count. threads == 0 picks the hardware
// concurrency.
template <typename Fn>
void parallel_for(std::size_t n, unsigned threads, Fn&& fn) {
    if (n == 0) return;
    unsigned hw = std::thread::hardware_concurrency();
    if (threads == 0) threads = hw ? hw : 1;
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, n));
    if (threads <= 1) {
        fn(std::size_t{0}, n);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(threads);
    std::size_t chunk = (n + threads - 1) / threads;
    for (unsigned t = 0; t < threads; ++t) {
        std::size_t begin = t * chunk;
        std::size_t end = std::min(n, begin + chunk);
        if (begin >= end) break;
        pool.emplace_back([&fn, begin, end] { fn(begin, end); });
    }
    for (auto& th : pool) th.join();
}

}  // namespace occukit
