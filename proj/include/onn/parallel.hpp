#pragma once

#include <cstddef>
#include <functional>

namespace onn {

/// Worker count from ONN_WORKERS, else the hardware concurrency (>= 1).
int worker_count();

/// Runs body(i) for i in [0, n) across worker threads. Each index is executed
/// exactly once; callers write results into per-index slots so the outcome
/// does not depend on scheduling. The first exception is rethrown.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body, int workers = 0);

}  // namespace onn
