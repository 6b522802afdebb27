#pragma once

// Process-wide worker count and an index-parallel loop. Work items must be
// independent; results are written by index, so output does not depend on
// the worker count.

#include <cstddef>
#include <functional>

namespace alphadyn {

// 0 or negative selects the hardware concurrency
void set_workers(int n);
int workers();

// runs fn(0..n-1); rethrows the exception of the lowest failing index
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace alphadyn
