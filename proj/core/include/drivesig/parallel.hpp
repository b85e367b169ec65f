#pragma once

#include <cstddef>
#include <functional>

namespace drivesig {

// Runs body(i) for i in [0, n) on at most `jobs` threads (0 = hardware
// concurrency). Each index runs exactly once; callers write results into
// per-index slots so the outcome does not depend on scheduling. The first
// exception thrown by any task is rethrown after all threads join.
void parallel_for(std::size_t n, std::size_t jobs, const std::function<void(std::size_t)>& body);

}  // namespace drivesig
