#pragma once

#include <vector>

namespace hth {

// Adjusted Rand index of two partitions given as label vectors of equal length.
double ari(const std::vector<int>& a, const std::vector<int>& b);

}  // namespace hth
