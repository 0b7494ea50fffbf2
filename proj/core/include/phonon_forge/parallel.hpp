#pragma once

#include <cstddef>
#include <functional>

namespace phonon_forge {

// Worker count to use when the caller passes 0: PHONON_FORGE_THREADS if set to a
// positive integer, otherwise std::thread::hardware_concurrency().
unsigned resolve_threads(unsigned requested);

// Runs fn(begin, end) over contiguous chunks of [0, count) on up to `threads`
// workers. Chunk boundaries depend only on count and chunk, never on the thread
// count, so per-index work is reproducible. The first exception thrown by any
// worker is rethrown on the calling thread.
void parallel_for(std::size_t count, unsigned threads, std::size_t chunk,
                  const std::function<void(std::size_t, std::size_t)>& fn);

}  // namespace phonon_forge
