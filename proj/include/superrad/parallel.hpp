#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace superrad {

inline int resolve_workers(int requested) {
  if (requested > 0) return requested;
  return std::max(1, static_cast<int>(std::thread::hardware_concurrency()));
}

// Calls job(i) for i in [0, n) on up to `workers` threads, pulling indices
// from a shared counter. Results must be written into pre-sized slots by
// index. Returns the exception raised by each index (null on success).
template <class Job>
std::vector<std::exception_ptr> parallel_for(std::size_t n, int workers, Job&& job) {
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto drain = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        job(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const auto threads = std::min<std::size_t>(static_cast<std::size_t>(resolve_workers(workers)), n);
  if (threads <= 1) {
    drain();
    return errors;
  }
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(drain);
  for (auto& t : pool) t.join();
  return errors;
}

// Rethrows the first recorded exception, in index order.
inline void rethrow_first(const std::vector<std::exception_ptr>& errors) {
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace superrad
