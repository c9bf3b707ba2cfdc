#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace mutforest {

/// Runs body(r) for r in [0, count) on `workers` threads with dynamic
/// scheduling. Results must be written to per-replicate slots by the caller;
/// aggregation then happens in replicate order so the outcome never depends
/// on the worker count.
template <class Body>
void parallel_replicates(std::int64_t count, int workers, Body&& body) {
  if (count <= 0) return;
  workers = std::max(1, workers);
  if (workers == 1 || count == 1) {
    for (std::int64_t r = 0; r < count; ++r) body(r);
    return;
  }
  std::atomic<std::int64_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (;;) {
      const std::int64_t r = next.fetch_add(1, std::memory_order_relaxed);
      if (r >= count) return;
      try {
        body(r);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next.store(count);
        return;
      }
    }
  };
  std::vector<std::jthread> pool;
  const auto n = static_cast<std::int64_t>(workers) < count ? workers : static_cast<int>(count);
  pool.reserve(static_cast<std::size_t>(n));
  for (int w = 0; w < n; ++w) pool.emplace_back(worker);
  pool.clear();
  if (failure) std::rethrow_exception(failure);
}

/// Maps replicate indices to results, preserving replicate order.
template <class Result, class Body>
std::vector<Result> map_replicates(std::int64_t count, int workers, Body&& body) {
  std::vector<Result> out(static_cast<std::size_t>(std::max<std::int64_t>(count, 0)));
  parallel_replicates(count, workers, [&](std::int64_t r) { out[static_cast<std::size_t>(r)] = body(r); });
  return out;
}

}  // namespace mutforest
