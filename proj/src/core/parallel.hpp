#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <thread>
#include <vector>

namespace cmjsim {

// Runs body(r) for r = 0..reps-1 on a bounded worker pool. Each replicate
// must write only to its own output slot; any aggregation happens afterwards
// in replicate order, so results are independent of the worker count.
inline void parallel_replicates(std::uint64_t reps, unsigned workers,
                                const std::function<void(std::uint64_t)>& body) {
  if (workers <= 1 || reps <= 1) {
    for (std::uint64_t r = 0; r < reps; ++r) body(r);
    return;
  }
  if (workers > reps) workers = static_cast<unsigned>(reps);
  std::atomic<std::uint64_t> next{0};
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        std::uint64_t r = next.fetch_add(1, std::memory_order_relaxed);
        if (r >= reps) return;
        body(r);
      }
    });
  }
  for (auto& t : pool) t.join();
}

// Worker-count resolution: the CMJSIM_WORKERS environment variable overrides
// the requested value.
unsigned resolve_workers(unsigned requested);

}  // namespace cmjsim
