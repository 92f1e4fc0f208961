#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "hiermix/errors.hpp"

namespace hiermix {

/// Linear-interpolation quantile between closest ranks (the "type 7"
/// estimator): position p * (n - 1) within the sorted values.
inline double quantile_type7(const std::vector<double>& sorted, double p) {
  if (sorted.empty())
    throw DataError("quantile: no values");
  if (!(p >= 0.0) || !(p <= 1.0))
    throw ConfigError("quantile: level must lie in [0, 1]");
  const double pos = p * static_cast<double>(sorted.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(pos);
  if (lo + 1 >= sorted.size()) return sorted.back();
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

}  // namespace hiermix
