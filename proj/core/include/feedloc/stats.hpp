#pragma once

#include <algorithm>
#include <cstddef>
#include <vector>

namespace feedloc {

/// Median with the even-count convention of averaging the two middle values.
/// Precondition: non-empty.
inline double median(std::vector<double> values) {
  const std::size_t n = values.size();
  const auto mid = values.begin() + static_cast<std::ptrdiff_t>(n / 2);
  std::nth_element(values.begin(), mid, values.end());
  const double upper = *mid;
  if (n % 2 == 1) {
    return upper;
  }
  const double lower = *std::max_element(values.begin(), mid);
  return 0.5 * (lower + upper);
}

}  // namespace feedloc
