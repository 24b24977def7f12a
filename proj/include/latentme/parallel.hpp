#pragma once

#include <cstddef>
#include <functional>

namespace latentme {

/// Worker count: LATENTME_THREADS if set (>= 1), else hardware concurrency.
std::size_t worker_count();

/// Runs body(i) for i in [0, n). Nested calls run serially on the calling thread.
/// Callers must write results by index so the outcome is schedule-independent.
/// The exception from the lowest failing index is rethrown after all workers join.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace latentme
