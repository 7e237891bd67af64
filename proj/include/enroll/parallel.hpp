#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>

namespace enroll {

/// Number of worker threads to use. Honors ENROLL_OPT_THREADS; 0 or unset
/// means hardware concurrency.
unsigned thread_count();

/// Runs fn(i) for i in [begin, end) across thread_count() workers using a
/// static block partition. fn must be safe to call concurrently for distinct
/// indices; results should be written to preallocated per-index slots so the
/// outcome is independent of the partition.
void parallel_for(std::int64_t begin, std::int64_t end,
                  const std::function<void(std::int64_t)>& fn);

/// Block partition of [0, n): runs fn(chunk_begin, chunk_end, chunk_index)
/// on each worker. chunk_index is dense in [0, chunks).
void parallel_chunks(std::int64_t n,
                     const std::function<void(std::int64_t, std::int64_t, unsigned)>& fn,
                     unsigned* chunks_out = nullptr);

}  // namespace enroll
