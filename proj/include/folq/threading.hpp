#pragma once

#include <cstddef>
#include <exception>
#include <functional>
#include <thread>
#include <vector>

namespace folq {

inline int default_threads() {
  const unsigned n = std::thread::hardware_concurrency();
  return n == 0 ? 1 : static_cast<int>(n);
}

/// Run fn(i) for i in [0, n) across up to `threads` workers. Items must be
/// independent; each writes only its own output slot, so the result does
/// not depend on the thread count. The lowest-index exception wins.
inline void parallel_for(size_t n, int threads,
                         const std::function<void(size_t)>& fn) {
  if (threads <= 0) threads = default_threads();
  const size_t workers =
      std::min<size_t>(static_cast<size_t>(threads), n == 0 ? 1 : n);
  if (workers <= 1) {
    for (size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::exception_ptr> errors(workers);
  std::vector<size_t> error_index(workers, n);
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w]() {
      for (size_t i = w; i < n; i += workers) {
        try {
          fn(i);
        } catch (...) {
          if (!errors[w]) {
            errors[w] = std::current_exception();
            error_index[w] = i;
          }
          return;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  size_t best = n;
  std::exception_ptr first;
  for (size_t w = 0; w < workers; ++w) {
    if (errors[w] && error_index[w] < best) {
      best = error_index[w];
      first = errors[w];
    }
  }
  if (first) std::rethrow_exception(first);
}

}  // namespace folq
