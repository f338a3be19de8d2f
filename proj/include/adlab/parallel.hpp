#pragma once

#include <cstddef>
#include <functional>

namespace adlab {

// Effective worker count: `requested` if nonzero, else the ADLAB_THREADS
// environment variable, else hardware concurrency.
std::size_t worker_count(std::size_t requested = 0);

// Runs body(chunk_index) for every chunk in [0, chunk_count) across up to
// `workers` threads. Chunk-to-thread assignment is dynamic, so bodies must
// write only to per-chunk slots; callers reduce those slots in index order to
// stay independent of the worker count. The first exception thrown by a body
// is rethrown after all workers join.
void parallel_chunks(std::size_t chunk_count, std::size_t workers,
                     const std::function<void(std::size_t)>& body);

}  // namespace adlab
