#pragma once

#include <cstddef>
#include <functional>

namespace s2f {

// Worker count from S2F_NUM_THREADS, else the hardware concurrency (at least 1).
std::size_t thread_count();

// Runs body(i) for i in [0, count) on up to thread_count() threads and waits.
// Work is split into contiguous chunks; the first exception is rethrown.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body);

}  // namespace s2f
