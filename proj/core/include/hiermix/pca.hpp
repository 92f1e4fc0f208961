#pragma once

#include "hiermix/linalg.hpp"

namespace hiermix {

/// Principal components of a J x M matrix (rows = samples), from the
/// singular value decomposition of the column-centered data.  Covariance
/// scaling only: columns are centered but not standardized, since population
/// proportions already share a scale.
struct PcaResult {
  Vector column_means;  // M
  /// Projections of the centered rows onto the components (U * S).
  Matrix scores;  // J x r with r = min(J, M)
  /// Right singular vectors, one unit-norm column per component.
  Matrix components;  // M x r
  /// Components scaled by singular value / sqrt(J - 1); the arrow
  /// coordinates of a biplot.
  Matrix loadings;  // M x r
  Vector singular_values;           // r, nonincreasing
  Vector explained_variance_ratio;  // r, nonincreasing, sums to 1

  /// scores * components' + column means; reproduces the input when all
  /// components are kept.
  Matrix reconstruct() const;
};

/// Throws DataError when the input has fewer than two rows or columns or is
/// constant (rank zero after centering).
PcaResult pca_biplot(const Matrix& x);

}  // namespace hiermix
