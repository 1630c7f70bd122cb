#include "topowarp/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <thread>
#include <vector>

namespace topowarp {

namespace {
std::atomic<int> g_threads{1};
}

void set_worker_threads(int n) {
  g_threads.store(std::max(1, n));
}

int worker_threads() {
  return g_threads.load();
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
  const int workers = static_cast<int>(std::min<std::size_t>(g_threads.load(), n));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }

  std::exception_ptr error;
  std::atomic<bool> failed{false};
  std::vector<std::thread> pool;
  pool.reserve(workers);
  const std::size_t chunk = (n + workers - 1) / workers;
  for (int w = 0; w < workers; ++w) {
    const std::size_t begin = w * chunk;
    const std::size_t end = std::min(n, begin + chunk);
    pool.emplace_back([&, begin, end]() {
      try {
        for (std::size_t i = begin; i < end && !failed.load(std::memory_order_relaxed); ++i) {
          fn(i);
        }
      } catch (...) {
        if (!failed.exchange(true)) {
          error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace topowarp
