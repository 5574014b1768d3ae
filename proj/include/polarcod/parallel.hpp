#pragma once

#include <cstddef>
#include <functional>

namespace polarcod {

// POLARCOD_THREADS when set to a positive integer, else the hardware count.
int worker_count();
// Runs fn(i) for i in [0, n) on up to worker_count() threads. The first
// exception thrown by any call is rethrown after all workers finish.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace polarcod
