#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

namespace thermo {

// Linear-interpolated percentile (numpy's default "linear" method) of an
// already sorted, non-empty sample. p in [0, 100].
inline double percentile_sorted(std::span<const double> sorted, double p) {
  const double rank = p / 100.0 * double(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(rank));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = rank - double(lo);
  return sorted[lo] + (sorted[hi] - sorted[lo]) * frac;
}

inline double percentile(std::vector<double> sample, double p) {
  std::sort(sample.begin(), sample.end());
  return percentile_sorted(sample, p);
}

}  // namespace thermo
