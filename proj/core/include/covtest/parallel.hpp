#pragma once

#include <cstddef>
#include <functional>

namespace covtest {

// Calls body(i) for every i in [0, count) on up to `threads` workers. Work
// is claimed by index, so any result written to slot i is independent of
// scheduling. The first exception thrown by a body is rethrown.
void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& body);

// Thread count from COVTEST_THREADS, or 1 when unset or invalid.
int threads_from_env();

}  // namespace covtest
