#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace dualview {

/// Worker count: DUALVIEW_THREADS if set and positive, else hardware concurrency.
inline std::size_t thread_count() {
  std::size_t hw = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("DUALVIEW_THREADS")) {
    try {
      const long v = std::stol(env);
      if (v > 0) return std::min<std::size_t>(static_cast<std::size_t>(v), 256);
    } catch (...) {
    }
  }
  return hw;
}

namespace detail {
inline thread_local bool in_parallel_worker = false;
}

/// Runs fn(i) for i in [0, n) on up to thread_count() workers. Work items
/// must write to disjoint outputs. The first exception is rethrown.
/// Calls made from inside a worker run sequentially.
template <typename Fn>
void parallel_for(std::size_t n, Fn&& fn) {
  const std::size_t workers = detail::in_parallel_worker ? 1 : std::min(thread_count(), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::jthread> pool;
  pool.reserve(workers);
  for (std::size_t t = 0; t < workers; ++t) {
    pool.emplace_back([&] {
      detail::in_parallel_worker = true;
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
          next = n;
        }
      }
    });
  }
  pool.clear();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace dualview
