#pragma once

#include <cstddef>
#include <functional>

namespace tissuemix {

/// Calls fn(i) for every i in [0, n) on up to `threads` threads. If any call
/// throws, the exception of the lowest failing index is rethrown after all
/// workers stop.
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn);

}  // namespace tissuemix
