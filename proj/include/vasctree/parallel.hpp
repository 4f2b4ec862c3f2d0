#pragma once

#include <cstddef>
#include <functional>

namespace vasctree {

/// Worker count used by parallel_for. Defaults to the hardware concurrency,
/// capped by the VASCTREE_THREADS environment variable when set.
std::size_t thread_count();

/// Overrides the worker count for the current process (0 restores the default).
void set_thread_count(std::size_t n);

/// Runs body(begin, end) over contiguous chunks of [0, n). Each index is
/// visited exactly once; bodies must only write to index-owned state so the
/// result does not depend on the number of workers.
void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& body);

}  // namespace vasctree
