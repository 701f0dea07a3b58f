#pragma once

#include <cstddef>
#include <functional>

namespace atsp {

// Worker count used by the row-parallel kernels. Results never depend on it:
// every output entry is produced by exactly one worker with a fixed
// summation order.
void set_num_threads(std::size_t n);
std::size_t num_threads();

/// Calls fn(i) for i in [0, count), split into contiguous static chunks.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& fn);

}  // namespace atsp
