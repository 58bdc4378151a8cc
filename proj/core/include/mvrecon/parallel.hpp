#pragma once

#include <cstdint>
#include <functional>

namespace mvr {

/// Worker-thread count used by parallel_chunks. Defaults to the hardware
/// concurrency; the MVRECON_THREADS environment variable or set_thread_count
/// override it.
int thread_count();
void set_thread_count(int n);

/// Number of chunks [begin,end) splits into for a given chunk size.
std::int64_t chunk_count(std::int64_t n, std::int64_t chunk);

/// Runs fn(begin, end, chunk_index) over fixed-size chunks of [0, n).
///
/// The chunk grid depends only on n and chunk, never on the thread count, so
/// per-chunk partial results reduced in chunk order give bitwise-identical
/// totals regardless of how many workers ran.
void parallel_chunks(std::int64_t n, std::int64_t chunk,
                     const std::function<void(std::int64_t, std::int64_t, std::int64_t)>& fn);

}  // namespace mvr
