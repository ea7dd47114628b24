#pragma once

#include "vqvol/tensor.hpp"

#include <functional>

namespace vqvol {

/// Worker count: VQVOL_THREADS when set (>= 1), otherwise the hardware concurrency.
int thread_count();

/// Runs fn(i) for i in [0, n). Iterations must write disjoint outputs; callers
/// reduce per-iteration partials in index order so results do not depend on
/// the worker count.
void parallel_for(Index n, const std::function<void(Index)>& fn);

}  // namespace vqvol
