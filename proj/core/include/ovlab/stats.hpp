#pragma once

#include <span>

namespace ovlab {

// Sample Pearson correlation. Throws DimensionError on length mismatch or
// fewer than 2 points, ZeroVariance if either series is constant.
double pearson_r(std::span<const double> a, std::span<const double> b);

}  // namespace ovlab
