#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace moire {

void set_thread_count(unsigned n);  // 0 restores the hardware default
unsigned thread_count();

// Calls f(i) for i in [0, n) with a fixed block partition. Callers write to
// per-index slots, so results do not depend on the thread count.
template <class F>
void parallel_for(std::size_t n, F&& f) {
  const unsigned threads = std::min<std::size_t>(thread_count(), n);
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) f(i);
    return;
  }
  std::exception_ptr first;
  std::mutex mu;
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (unsigned w = 0; w < threads; ++w) {
    const std::size_t lo = n * w / threads;
    const std::size_t hi = n * (w + 1) / threads;
    pool.emplace_back([&, lo, hi] {
      try {
        for (std::size_t i = lo; i < hi; ++i) f(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(mu);
        if (!first) first = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  if (first) std::rethrow_exception(first);
}

}  // namespace moire
