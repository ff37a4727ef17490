#pragma once

#include <cstddef>
#include <functional>

namespace ifs {

/// Cap on worker threads used by parallel_for (0 = hardware concurrency).
void set_thread_limit(unsigned n);
unsigned thread_limit();

/// Runs body(i) for i in [0, n). Work is split into contiguous chunks, so
/// callers that write result[i] get output independent of the thread count.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace ifs
