#pragma once

#include "hiermix/linalg.hpp"
#include "hiermix/model.hpp"

namespace hiermix {

/// Affine per-marker rescaling fitted on pooled percentiles: marker m maps
/// y to (y - q01[m]) / (q99[m] - q01[m]), so the bulk of the pooled cells
/// lands in [0, 1] while tails keep their relative distances.
struct ScalingTransform {
  Vector q01;
  Vector q99;
};

/// Pooled 1st and 99th percentiles per marker, with linear interpolation
/// between order statistics at p * (n - 1).  Throws DataError when fewer
/// than 100 pooled cells are available or a marker is constant between the
/// two percentiles.
ScalingTransform fit_scaling(const Dataset& data);

/// Applies the transform markerwise to every sample and returns the copy
/// flagged as scaled.  Throws ConfigError when the dataset is already
/// scaled (double scaling would silently change the geometry) and DataError
/// when the transform dimension disagrees with the data.
Dataset apply_scaling(const Dataset& data, const ScalingTransform& transform);

}  // namespace hiermix
