#pragma once

#include <thread>
#include <vector>

namespace nbdiff {

/// Runs fn(i) for i in [0, n) on up to `threads` workers. Callers own
/// determinism: fn must write only to its own index's slot, and any
/// floating-point reduction happens afterwards in index order.
template <typename Fn>
void parallel_for(int n, int threads, Fn&& fn) {
  if (threads > n) threads = n;
  if (threads <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (int t = 0; t < threads; ++t)
    pool.emplace_back([&fn, t, n, threads] {
      for (int i = t; i < n; i += threads) fn(i);
    });
  for (auto& th : pool) th.join();
}

}  // namespace nbdiff
