#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "hiermix/linalg.hpp"
#include "hiermix/model.hpp"
#include "hiermix/rng.hpp"

namespace hiermix {

/// Everything needed to draw datasets from the generative model top-down:
/// true latent-layer parameters, the per-sample activation pattern, and the
/// mixture weights.
struct GeneratorSpec {
  int J = 0;
  int d = 0;
  int K = 0;
  std::vector<int> n_cells;         // length J
  std::vector<Vector> theta;        // K latent cluster means
  std::vector<Matrix> sigma_theta;  // K spreads of mu_jk around theta_k
  std::vector<Matrix> psi;          // K inverse-Wishart scales for Sigma_jk
  std::vector<int> nu;              // K degrees of freedom
  std::vector<std::vector<std::uint8_t>> activation;  // J x K presence flags

  /// Base mixture weights over the outlier (index 0) plus the K clusters;
  /// per sample the inactive entries are dropped and the rest renormalized.
  Vector base_weights;
  /// 0 keeps the renormalized base weights exactly; a positive value draws
  /// pi_j from a Dirichlet with this concentration times those weights.
  double weight_concentration = 0.0;

  Vector outlier_mean;
  Matrix outlier_cov;
  std::uint64_t seed = 1;

  /// Throws ConfigError on inconsistent sizes, non-simplex base weights,
  /// empty activation rows, or dof below d + 2.
  void validate() const;

  /// Paper-scale three-marker design: 80 samples of 15000 * scale cells
  /// from four latent clusters, one present in only 8 samples as a 1%
  /// population and one present in 24 samples.
  static GeneratorSpec sec31(double scale = 1.0);

  /// Same clusters at desk scale for acceptance checks: 20 samples of 2000
  /// cells, cluster 4 present in 2 of the 20 samples (a 1% population).
  static GeneratorSpec desk();
};

/// The drawn parameters behind a synthetic dataset, for recovery studies.
struct GroundTruth {
  std::vector<Vector> theta;
  std::vector<Matrix> sigma_theta;
  std::vector<Matrix> psi;
  std::vector<int> nu;
  std::vector<std::vector<Vector>> mu;     // J x K
  std::vector<std::vector<Matrix>> sigma;  // J x K
  std::vector<Vector> pi;                  // J vectors of size K+1
  std::vector<std::vector<std::uint8_t>> activation;  // J x K
  std::vector<std::vector<int>> assignments;          // J x n_j, 0 = outlier
  Vector outlier_mean;
  Matrix outlier_cov;

  /// Implied within-sample covariance of cluster k, psi_k / (nu_k - d - 1).
  Matrix latent_cov(int k) const;
};

/// Draws a dataset top-down: mu_jk and Sigma_jk for every (j,k) from the
/// linking priors, pi_j over the active components, then assignments and
/// cells.  All randomness comes from `rng`.
std::pair<Dataset, GroundTruth> generate_synthetic(const GeneratorSpec& spec,
                                                   RngStream& rng);

/// Convenience overload seeding a fresh stream from spec.seed.
std::pair<Dataset, GroundTruth> generate_synthetic(const GeneratorSpec& spec);

}  // namespace hiermix
