#pragma once

#include <cstddef>
#include <functional>

namespace svr {

// Global worker cap for all pipeline stages. 0 restores the default
// (SVRECON_WORKERS env var if set, else hardware concurrency).
void set_worker_count(int n);
int worker_count();

// Splits [0, n) into one contiguous chunk per worker and runs
// fn(begin, end, worker_id) on each. Chunk boundaries depend only on n and
// the worker count, so per-worker accumulation stays reproducible.
void parallel_chunks(std::size_t n,
                     const std::function<void(std::size_t, std::size_t, int)>& fn);

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace svr
