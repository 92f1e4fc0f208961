#pragma once

#include <vector>

#include "hiermix/linalg.hpp"
#include "hiermix/rng.hpp"

namespace hiermix {

/// A per-sample Gaussian mixture fit by expectation-maximization.
struct EmFit {
  std::vector<double> weights;  // K, sums to 1
  std::vector<Vector> means;    // K
  std::vector<Matrix> covs;     // K
  double log_likelihood = 0.0;
  int iterations = 0;
  int restarts_used = 0;
  /// argmax responsibility per row of the input.
  std::vector<int> hard_assignments;
};

/// k-means++ seeded Lloyd iterations; returns a k x d matrix of centers.
Matrix kmeans_centers(const Matrix& points, int k, RngStream& rng,
                      int max_iters = 50);

/// Standard EM for a K-component Gaussian mixture: k-means++ initialization,
/// `restarts` independent starts keeping the best log-likelihood,
/// convergence when the log-likelihood gain drops below `tol`.  Components
/// that collapse to a singular covariance restart with jittered
/// responsibilities.
EmFit em_baseline(const Matrix& sample, int k, RngStream& rng,
                  int restarts = 10, double tol = 1e-8, int max_iters = 500);

}  // namespace hiermix
