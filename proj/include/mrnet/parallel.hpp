#pragma once

#include <algorithm>
#include <cstdlib>
#include <thread>
#include <vector>

namespace mrnet {

/// Worker count for batch-parallel kernels. MRNET_THREADS overrides;
/// 1 disables threading entirely.
inline unsigned thread_count() {
  static const unsigned n = [] {
    if (const char* env = std::getenv("MRNET_THREADS")) {
      const long v = std::strtol(env, nullptr, 10);
      if (v >= 1) return static_cast<unsigned>(v);
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1u : hw;
  }();
  return n;
}

/// Static partition of [0, n) across workers. f(i) must only touch
/// state owned by index i; no ordering guarantees inside the loop.
template <typename F>
void parallel_for(std::size_t n, F&& f) {
  const unsigned workers = std::min<std::size_t>(thread_count(), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) f(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (std::size_t i = w; i < n; i += workers) f(i);
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace mrnet
