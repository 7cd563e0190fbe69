#pragma once
#include <cstddef>
#include <functional>

namespace ct::num {

// Number of worker threads: CT_THREADS if set, hardware concurrency otherwise.
int worker_count();

// Run fn(i) for i in [0, n). Work items must be independent; results written
// by index stay deterministic regardless of scheduling. Exceptions from
// workers are rethrown on the calling thread.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

} // namespace ct::num
