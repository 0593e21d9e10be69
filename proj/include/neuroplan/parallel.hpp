#pragma once

#include <cstddef>
#include <functional>

namespace neuroplan {

/// Worker count: NEUROPLAN_THREADS if set to a positive integer, else the hardware concurrency (at least 1).
[[nodiscard]] std::size_t thread_count();

/// Runs fn(i) for i in [0, n) on up to `threads` workers (0 = thread_count()).
/// Indices are claimed dynamically; the first exception thrown is rethrown after all workers stop.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn, std::size_t threads = 0);

} // namespace neuroplan
