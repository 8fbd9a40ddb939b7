#pragma once

#include <cstddef>
#include <functional>
#include <vector>

namespace dalbt {

// Intra-stage worker cap. Reads DALBT_THREADS once; value 1 forces fully
// sequential execution (bit-reproducible runs).
int thread_count();

// Runs fn(begin, end) over contiguous chunks of [0, n). Chunk boundaries
// depend only on n and the thread count, so any fixed-order reduction over
// chunk results is deterministic for a given DALBT_THREADS.
void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& fn);

struct ChunkRange {
    std::size_t begin = 0;
    std::size_t end = 0;
};

// Splits [0, n) into chunks of `grain` items. Boundaries depend only on n and
// grain, never on the thread count, so per-chunk partials reduced in chunk
// order give bit-identical sums at any DALBT_THREADS.
std::vector<ChunkRange> make_chunks(std::size_t n, std::size_t grain);

// Executes fn(chunk_index) once per chunk, possibly concurrently. Each chunk
// must write only its own output slot.
void run_chunks(std::size_t num_chunks, const std::function<void(std::size_t)>& fn);

} // namespace dalbt
