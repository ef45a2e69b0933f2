#pragma once

#include <cstddef>
#include <functional>

namespace classdiag {

/// Number of worker threads parallel loops may use. 1 disables threading.
int thread_budget();

/// Set the budget; 0 restores the hardware default. Thread count must never
/// change any computed result, only wall time.
void set_thread_budget(int n);

/// Runs fn(i) for every i in [0, count). Tasks write only to their own
/// per-index slots; reduction happens in index order at the caller, so the
/// schedule cannot leak into results. The first exception thrown by a task
/// is rethrown after all workers join.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& fn);

} // namespace classdiag
