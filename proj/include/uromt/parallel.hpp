#pragma once

#include <cstddef>
#include <functional>

namespace uromt {

/// Worker count from UROMT_NUM_THREADS, else the hardware concurrency (at least 1).
int default_thread_count();

/// Calls body(i) for i in [0, count) over `threads` workers in contiguous
/// chunks. Each index is visited exactly once, so writes to per-index slots are
/// deterministic regardless of the thread count.
void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)> &body);

} // namespace uromt
