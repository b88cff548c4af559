#pragma once

#include <cstddef>
#include <functional>

namespace ndno {

// Worker cap: min(hardware threads, NDNO_THREADS if set).
int worker_count();

// Runs fn(i) for i in [0, n). Results must be written to per-index slots by
// the caller; reductions happen after the join, in index order, so the
// outcome is identical for any worker count.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace ndno
