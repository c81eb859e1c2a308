#pragma once

#include <cstdint>
#include <functional>

namespace cloudseg {

// Number of worker threads ops may use (always >= 1).
int thread_count();

// 0 selects the hardware concurrency.
void set_thread_count(int n);

// Runs fn(begin, end) over disjoint contiguous chunks of [begin, end),
// one chunk per worker. Each index is visited by exactly one worker, so
// results are deterministic as long as chunks write disjoint outputs.
void parallel_for(std::int64_t begin, std::int64_t end,
                  const std::function<void(std::int64_t, std::int64_t)>& fn);

} // namespace cloudseg
