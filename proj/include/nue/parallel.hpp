#pragma once

#include <cstddef>
#include <functional>

namespace nue {

// Worker cap shared by the Monte-Carlo and seeding loops; 0 means hardware.
void set_max_threads(std::size_t n);
std::size_t max_threads();

// fn(i) for i in [0, count) on static contiguous chunks. Results must be
// written per index so the outcome does not depend on the thread count.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& fn);

}  // namespace nue
