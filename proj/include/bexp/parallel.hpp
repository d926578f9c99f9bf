#pragma once

#include <cstddef>
#include <functional>

namespace bexp {

// Worker count: BE_THREADS when set to a positive integer, otherwise the
// hardware concurrency (at least 1).
std::size_t worker_count();

// Runs fn(i) for i in [0, n) on up to worker_count() threads. Calls made
// from inside a worker run serially. The first exception thrown by any
// call is rethrown on the calling thread after all workers finish.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace bexp
