#pragma once

#include <algorithm>
#include <cstdlib>
#include <functional>
#include <string>
#include <thread>
#include <vector>

namespace muxread::detail {

// Thread budget: hardware concurrency, optionally capped by MUXREAD_THREADS.
inline unsigned thread_budget() {
  unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("MUXREAD_THREADS")) {
    long cap = std::strtol(env, nullptr, 10);
    if (cap >= 1 && static_cast<unsigned>(cap) < hw) hw = static_cast<unsigned>(cap);
  }
  return hw;
}

// Static block partition of [0, n).  Work items must be independent; results
// keyed by index, so output is identical for any thread count.
template <typename Fn>
void parallel_for(std::size_t n, Fn&& body) {
  unsigned nthreads = thread_budget();
  if (n == 0) return;
  if (nthreads <= 1 || n == 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  nthreads = std::min<std::size_t>(nthreads, n);
  std::vector<std::thread> pool;
  pool.reserve(nthreads);
  std::size_t chunk = (n + nthreads - 1) / nthreads;
  for (unsigned t = 0; t < nthreads; ++t) {
    std::size_t begin = t * chunk;
    std::size_t end = std::min(n, begin + chunk);
    if (begin >= end) break;
    pool.emplace_back([begin, end, &body] {
      for (std::size_t i = begin; i < end; ++i) body(i);
    });
  }
  for (auto& th : pool) th.join();
}

}  // namespace muxread::detail
