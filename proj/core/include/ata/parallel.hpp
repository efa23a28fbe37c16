#pragma once

#include <cstddef>
#include <functional>

namespace ata {

/// Worker count: ATA_THREADS when set, else `requested` when nonzero, else
/// the hardware concurrency (at least 1).
std::size_t resolve_threads(std::size_t requested = 0);

/// Runs fn(i) for i in [0, n) on up to `threads` workers. Each index runs
/// exactly once; the first exception is rethrown after all workers join.
void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& fn);

}  // namespace ata
