#pragma once

#include <algorithm>
#include <thread>
#include <vector>

namespace idtrack::detail {

// Runs fn(i) for i in [0, n) over up to `threads` workers in contiguous
// blocks. Callers write only to slot i, so results do not depend on the
// thread count.
template <typename Fn>
void parallel_for(int n, int threads, Fn&& fn) {
  threads = std::clamp(threads, 1, std::max(1, n));
  if (threads == 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::jthread> pool;
  pool.reserve(static_cast<std::size_t>(threads));
  const int block = (n + threads - 1) / threads;
  for (int t = 0; t < threads; ++t) {
    const int lo = t * block;
    const int hi = std::min(n, lo + block);
    if (lo >= hi) break;
    pool.emplace_back([lo, hi, &fn] {
      for (int i = lo; i < hi; ++i) fn(i);
    });
  }
}

}  // namespace idtrack::detail
