#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace woodmon::service {

// Indices (ascending) of at most `max_points` values. The first and last
// points are always kept; the interior is split into equal buckets and each
// bucket contributes its minimum and maximum, so extremes survive.
// max_points must be positive.
std::vector<std::size_t> minmax_downsample(std::span<const double> values, std::size_t max_points);

}  // namespace woodmon::service
