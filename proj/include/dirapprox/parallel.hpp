#pragma once

#include <cstddef>
#include <functional>

namespace dirapprox {

/// Worker count from DIRAPPROX_WORKERS, else 1.
int default_workers();

/// Runs fn(i) for i in [0, n) on up to `workers` threads. Items are
/// independent and write to their own slots, so results never depend on the
/// schedule. The exception from the lowest failing index is rethrown.
void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& fn);

}  // namespace dirapprox
