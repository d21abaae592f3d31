#pragma once

#include <cstddef>
#include <functional>

namespace glpge {

/// Worker count: GLPGE_THREADS when set to a positive integer, otherwise the
/// hardware concurrency (at least 1).
int worker_count();

/// Runs fn(i) for i in [0, n) on up to worker_count() threads. Work is split by
/// index, so results written per index do not depend on the thread count.
/// The first exception thrown by any task is rethrown after all workers join.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace glpge
