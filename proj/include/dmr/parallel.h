#pragma once

#include <cstddef>
#include <functional>
#include <span>

namespace dmr {

unsigned default_workers();

/// Runs body(i) for i in [0, n) on up to `workers` threads with static
/// contiguous chunking. The first exception thrown by any worker is rethrown.
void parallel_for(std::size_t n, unsigned workers, const std::function<void(std::size_t)>& body);

/// Pairwise summation in index order; the result depends only on the values,
/// never on how they were produced.
double pairwise_sum(std::span<const double> values);

}  // namespace dmr
