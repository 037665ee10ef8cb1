#pragma once

#include <cstddef>
#include <functional>

namespace tg {

// Global worker count used by all batched kernels. 0 = hardware concurrency.
void set_thread_count(int n);
int thread_count();

// Runs fn(begin, end) on contiguous chunks of [0, n). Each index is owned by
// exactly one chunk, so outputs indexed by the loop variable are bitwise
// independent of the worker count.
void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& fn);

}  // namespace tg
