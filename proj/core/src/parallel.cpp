#include "cloudseg/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <thread>
#include <vector>

namespace cloudseg {

namespace {
std::atomic<int> g_threads{0}; // 0 = auto
}

int thread_count() {
    int n = g_threads.load(std::memory_order_relaxed);
    if (n <= 0) {
        n = static_cast<int>(std::thread::hardware_concurrency());
    }
    return std::max(1, n);
}

void set_thread_count(int n) {
    g_threads.store(n, std::memory_order_relaxed);
}

void parallel_for(std::int64_t begin, std::int64_t end,
                  const std::function<void(std::int64_t, std::int64_t)>& fn) {
    const std::int64_t total = end - begin;
    if (total <= 0) {
        return;
    }
    const int workers = static_cast<int>(std::min<std::int64_t>(thread_count(), total));
    if (workers == 1) {
        fn(begin, end);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers - 1));
    const std::int64_t chunk = (total + workers - 1) / workers;
    for (int t = 1; t < workers; ++t) {
        const std::int64_t lo = begin + chunk * t;
        const std::int64_t hi = std::min(end, lo + chunk);
        if (lo >= hi) {
            break;
        }
        pool.emplace_back([&fn, lo, hi] { fn(lo, hi); });
    }
    fn(begin, std::min(end, begin + chunk));
    for (auto& th : pool) {
        th.join();
    }
}

} // namespace cloudseg
