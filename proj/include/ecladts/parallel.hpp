#pragma once

#include <cstddef>
#include <functional>

namespace ecladts {

// Worker count: ECLADTS_THREADS if set (>= 1), else hardware concurrency.
std::size_t worker_count();

// Runs task(i) for i in [0, n) on up to worker_count() threads. Tasks must
// write to disjoint outputs; results are therefore independent of scheduling.
// The first exception thrown by any task is rethrown.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& task);

}  // namespace ecladts
