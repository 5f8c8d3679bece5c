#pragma once

#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace twistlab {

inline unsigned default_workers() {
  unsigned h = std::thread::hardware_concurrency();
  return h ? h : 1;
}

// Dynamic scheduling over [0, n): workers repeatedly claim the next index.
// Items can have wildly uneven cost (a point count at p costs O(p)), so a
// shared counter beats static chunking. fn(i, worker) must be safe to call
// concurrently for distinct i; worker < workers identifies per-thread scratch.
template <class Fn>
void parallel_for_dynamic(std::size_t n, unsigned workers, Fn&& fn) {
  if (workers == 0) workers = default_workers();
  if (workers <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i, 0u);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i; (i = next.fetch_add(1)) < n;) fn(i, w);
      } catch (...) {
        std::lock_guard<std::mutex> guard(error_mutex);
        if (!first_error) first_error = std::current_exception();
        next.store(n);  // stop handing out work
      }
    });
  }
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace twistlab
