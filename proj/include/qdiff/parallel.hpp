#pragma once

#include <cstddef>
#include <functional>

namespace qdiff {

/// Worker count from QDIFF_WORKERS (default: hardware concurrency, at least 1).
int worker_count();

/// Runs body(i) for i in [0, n). Indices are claimed dynamically but callers
/// write results by index, so reductions done afterwards are order-independent.
/// The first exception thrown by any body is rethrown on the calling thread.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace qdiff
