#pragma once

#include <cstddef>
#include <functional>

namespace otflow {

// Process-wide worker count used by parallel_for. Defaults to the value of
// OTFLOW_THREADS when set, otherwise to std::thread::hardware_concurrency().
int num_threads();
void set_num_threads(int n);

// Calls fn(i) for every i in [0, n). Each index is visited exactly once and
// indices are partitioned into contiguous blocks, so per-index writes are
// race-free and results do not depend on the thread count.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace otflow
