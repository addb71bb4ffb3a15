#pragma once

#include <cstddef>
#include <functional>

namespace percarch {

/// Number of worker threads the machine offers (at least 1).
int hardware_threads();

/// Runs fn(i) for i in [0, n) on up to `threads` workers. Work is claimed
/// dynamically, so callers must write results by index. If any call throws,
/// the exception from the lowest failing index is rethrown after all workers
/// stop.
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn);

}  // namespace percarch
