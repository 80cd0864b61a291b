#pragma once

#include <cstddef>
#include <functional>

namespace atsal {

// Worker count: hardware concurrency, capped by the ODV_THREADS environment
// variable when set to a positive integer.
std::size_t worker_count();

// Runs body(i) for i in [0, count). Iterations are distributed in contiguous
// blocks, so any per-index output is written by exactly one thread. Calls made
// from inside a worker run serially on that worker.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body);

} // namespace atsal
