#pragma once

#include <algorithm>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace rte {

/// Worker count from RTE_WORKERS, else 1.
inline int default_workers() {
  if (const char* s = std::getenv("RTE_WORKERS")) {
    int n = std::atoi(s);
    if (n > 0) return n;
  }
  return 1;
}

/// Calls fn(i) for i in [0, n) on up to `workers` threads with a static block
/// partition. Each index writes only its own slot, so results do not depend
/// on the worker count. The first exception thrown is rethrown.
template <class Fn>
void parallel_for(int n, int workers, Fn&& fn) {
  workers = std::max(1, std::min(workers, n));
  if (workers == 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::exception_ptr err;
  std::mutex mu;
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w) {
    int lo = static_cast<int>(static_cast<long long>(n) * w / workers);
    int hi = static_cast<int>(static_cast<long long>(n) * (w + 1) / workers);
    pool.emplace_back([&, lo, hi] {
      try {
        for (int i = lo; i < hi; ++i) fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(mu);
        if (!err) err = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  if (err) std::rethrow_exception(err);
}

}  // namespace rte
