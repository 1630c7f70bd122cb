#pragma once

#include <cstddef>
#include <functional>

namespace topowarp {

// Process-wide worker count for data-parallel loops (1 = fully serial).
// Work is split into contiguous index ranges and every output slot is
// written by exactly one worker, so results are identical for any setting.
void set_worker_threads(int n);
int worker_threads();

// Calls fn(i) for i in [0, n). Exceptions from workers are rethrown on the
// calling thread (first one wins).
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace topowarp
