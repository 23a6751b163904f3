#pragma once
/// @file parallel.hpp
/// @brief Index-based worker pool. Work items own derived RNG streams keyed
/// by their index, so results never depend on scheduling; callers write
/// results into pre-sized slots.

#include <atomic>
#include <cstdint>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace minmc {

/// Runs fn(i) for i in [0, count) on `threads` workers (1 = inline).
/// The first exception thrown by any item is rethrown after all workers join.
inline void parallel_for_index(std::int64_t count, int threads,
                               const std::function<void(std::int64_t)>& fn) {
  if (count <= 0) return;
  if (threads < 1) threads = 1;
  if (threads == 1 || count == 1) {
    for (std::int64_t i = 0; i < count; ++i) fn(i);
    return;
  }

  std::atomic<std::int64_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex error_mutex;

  auto worker = [&] {
    while (!failed.load(std::memory_order_relaxed)) {
      const std::int64_t i = next.fetch_add(1, std::memory_order_relaxed);
      if (i >= count) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
        failed.store(true, std::memory_order_relaxed);
        return;
      }
    }
  };

  std::vector<std::thread> pool;
  const int n_workers = static_cast<int>(
      std::min<std::int64_t>(threads, count));
  pool.reserve(static_cast<std::size_t>(n_workers));
  for (int t = 0; t < n_workers; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace minmc
