#pragma once

#include <cstddef>
#include <functional>

namespace gencalc {

/// Worker cap for internal parallel loops. Defaults to GENCALC_THREADS when set,
/// otherwise the hardware concurrency.
int thread_count();
void set_thread_count(int n);

/// Runs body(i) for i in [0, n) on up to thread_count() workers. Results must be
/// written by index, so output order never depends on scheduling. The first
/// exception (lowest index) is rethrown after all workers join.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace gencalc
