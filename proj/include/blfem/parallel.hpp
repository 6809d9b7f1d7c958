#pragma once

#include <functional>

namespace blfem {

/// Worker count: BLFEM_THREADS if set (>= 1), else the hardware concurrency.
int thread_budget();

/// Runs body(0..n-1) on up to `threads` workers. Nested calls run serially so
/// concurrent study levels do not multiply the thread count. The first
/// exception thrown by any task is rethrown after all workers stop.
void parallel_for(int n, const std::function<void(int)>& body, int threads = thread_budget());

}  // namespace blfem
