#pragma once

#include <cstdlib>
#include <functional>
#include <thread>
#include <vector>

namespace fuseforge {

/// Worker count: hardware concurrency, capped by FUSEFORGE_THREADS if set.
inline int worker_count() {
    int n = int(std::thread::hardware_concurrency());
    if (n < 1) n = 1;
    if (const char* env = std::getenv("FUSEFORGE_THREADS")) {
        const int cap = std::atoi(env);
        if (cap >= 1 && cap < n) n = cap;
    }
    return n;
}

/// Runs fn(begin..end) split into contiguous ranges across workers. Each
/// output element must depend only on the inputs so the split is bit-exact
/// regardless of thread count.
inline void parallel_for_rows(int begin, int end, const std::function<void(int, int)>& fn) {
    const int total = end - begin;
    const int workers = worker_count();
    if (total <= 0) return;
    if (workers == 1 || total < 2 * workers) {
        fn(begin, end);
        return;
    }
    std::vector<std::thread> threads;
    threads.reserve(size_t(workers));
    const int chunk = (total + workers - 1) / workers;
    for (int w = 0; w < workers; ++w) {
        const int lo = begin + w * chunk;
        const int hi = std::min(end, lo + chunk);
        if (lo >= hi) break;
        threads.emplace_back([&fn, lo, hi] { fn(lo, hi); });
    }
    for (auto& t : threads) t.join();
}

}  // namespace fuseforge
