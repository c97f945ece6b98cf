// Copyright Contributors to the FSGS Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <thread>
#include <vector>

namespace fsgs {

inline int default_thread_count() {
    unsigned n = std::thread::hardware_concurrency();
    return n == 0 ? 1 : int(n);
}

// Runs fn(i) for i in [0, n). Work items must write to disjoint state so the
// result is independent of the worker count.
template <typename Fn>
void parallel_for(std::size_t n, int threads, Fn&& fn, std::size_t chunk = 64) {
    if (threads <= 1 || n <= chunk) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (;;) {
            std::size_t start = next.fetch_add(chunk);
            if (start >= n) return;
            std::size_t end = std::min(start + chunk, n);
            for (std::size_t i = start; i < end; ++i) fn(i);
        }
    };
    std::vector<std::thread> pool;
    int spawn = std::min<int>(threads, int((n + chunk - 1) / chunk)) - 1;
    pool.reserve(std::size_t(std::max(spawn, 0)));
    for (int t = 0; t < spawn; ++t) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();
}

}  // namespace fsgs
