#pragma once

#include <cstddef>
#include <functional>

namespace ibf {

// Name of the environment variable holding the worker count.
inline constexpr const char* kWorkersEnv = "IBF_WORKERS";

// Worker count from IBF_WORKERS; defaults to 1 when unset or invalid.
int worker_count();

// Runs fn(i) for i in [0, n) on up to `workers` threads. Each index is
// processed exactly once; callers write results into per-index slots so the
// outcome does not depend on scheduling. The first exception thrown by any
// task is rethrown after all threads join.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn,
                  int workers = worker_count());

}  // namespace ibf
