#include "hiermix/scaling.hpp"

#include <algorithm>
#include <vector>

#include "hiermix/errors.hpp"
#include "hiermix/stats.hpp"

namespace hiermix {

ScalingTransform fit_scaling(const Dataset& data) {
  data.validate();
  const int d = data.dim();
  const std::int64_t total = data.total_cells();
  if (total < 100) {
    throw DataError("fit_scaling: needs at least 100 pooled cells, got " +
                    std::to_string(total));
  }
  ScalingTransform transform;
  transform.q01 = Vector(d);
  transform.q99 = Vector(d);
  std::vector<double> pooled(static_cast<std::size_t>(total));
  for (int m = 0; m < d; ++m) {
    std::size_t at = 0;
    for (const Matrix& cells : data.samples) {
      for (Eigen::Index r = 0; r < cells.rows(); ++r) {
        pooled[at++] = cells(r, m);
      }
    }
    std::sort(pooled.begin(), pooled.end());
    transform.q01(m) = quantile_type7(pooled, 0.01);
    transform.q99(m) = quantile_type7(pooled, 0.99);
    if (!(transform.q99(m) > transform.q01(m))) {
      throw DataError("fit_scaling: marker \"" + data.marker_names[m] +
                      "\" is constant between the 1st and 99th percentiles");
    }
  }
  return transform;
}

Dataset apply_scaling(const Dataset& data, const ScalingTransform& transform) {
  if (data.scaled) {
    throw ConfigError("apply_scaling: dataset is already scaled");
  }
  const int d = data.dim();
  if (transform.q01.size() != d || transform.q99.size() != d) {
    throw DataError("apply_scaling: transform has " +
                    std::to_string(transform.q01.size()) +
                    " markers, data has " + std::to_string(d));
  }
  Dataset out = data;
  for (Matrix& cells : out.samples) {
    for (int m = 0; m < d; ++m) {
      const double span = transform.q99(m) - transform.q01(m);
      cells.col(m) = (cells.col(m).array() - transform.q01(m)) / span;
    }
  }
  out.scaled = true;
  return out;
}

}  // namespace hiermix
