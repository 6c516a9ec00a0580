#pragma once

#include <cstddef>
#include <functional>

namespace gridcert {

/// Worker count: hardware concurrency, capped by GRIDCERT_THREADS when set (>= 1).
std::size_t worker_count();

/// Runs body(i) for i in [0, n). Each index is written by exactly one worker, so
/// results stored per index merge deterministically. The first exception is rethrown.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace gridcert
