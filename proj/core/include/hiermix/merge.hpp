#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hiermix/linalg.hpp"
#include "hiermix/mcmc.hpp"
#include "hiermix/model.hpp"

namespace hiermix {

/// Moment summary of one (super-)cluster: mean, covariance, and its share of
/// the total cell mass.
struct GaussianSummary {
  Vector mean;
  Matrix cov;
  double weight = 0.0;
};

/// Thresholds and projection set for the agglomerative merge pass.
struct MergeConfig {
  /// Pairs closer than d1 always merge; pairs beyond d2 never do.  In
  /// between, merging requires every configured projection of the pooled
  /// cells to look unimodal.
  double d1 = 0.2;
  double d2 = 1.0;
  double dip_alpha = 0.05;
  int dip_bootstrap = 1000;
  bool project_axes = true;
  bool project_fisher = true;
  /// Use each cell's modal assignment instead of its soft weights when
  /// building the projection distributions for the dip test.
  bool hard_assignments = false;
  /// Seed for the bootstrap null tables (cached per sample size, so p-values
  /// depend only on the projected cells and this seed).
  std::uint64_t seed = 1;

  /// Throws ConfigError unless 0 < d1 <= d2, 0 < dip_alpha < 1,
  /// dip_bootstrap >= 1, and at least one projection family is enabled.
  void validate() const;
};

/// One accepted merge.  `into` is the surviving super-cluster id (always the
/// smaller), `from` the absorbed one.  `criterion` is "distance" for merges
/// under d1 and "unimodal" for merges accepted by the dip test, in which
/// case `dip_p_values` holds one p-value per projection tested.
struct MergeStep {
  int into = 0;
  int from = 0;
  double distance = 0.0;
  std::string criterion;
  std::vector<double> dip_p_values;
};

/// Final partition of the latent components into populations.
struct MergeResult {
  /// partition[k-1] = population id of component k (ids are the smallest
  /// member component, so singletons keep their own id).
  std::vector<int> partition;
  std::vector<MergeStep> merge_log;
  /// Surviving population ids, ascending.
  std::vector<int> population_ids;
  /// Per-sample cell weights over {outlier} + populations: column 0 is the
  /// outlier, column 1+p belongs to population_ids[p].  Rows sum to 1.
  std::vector<Matrix> soft_weights;
};

/// Bhattacharyya distance between two Gaussians,
///   (1/8) (m1-m2)^T S^-1 (m1-m2) + (1/2) log(|S| / sqrt(|C1| |C2|))
/// with S = (C1+C2)/2, evaluated through Cholesky log-determinants.
/// Throws NumericalError when a covariance is not positive definite.
double bhattacharyya(const GaussianSummary& g1, const GaussianSummary& g2);

/// Per-cell posterior assignment frequencies from a chain run: one matrix per
/// sample, n_j x (K+1), column 0 the outlier, rows summing to 1.  Throws
/// DataError when the trace carries no assignment accumulators or does not
/// match the dataset shape.
std::vector<Matrix> soft_cluster_weights(const Trace& trace,
                                         const Dataset& data);

/// Soft-weighted pooled moments of all cells over the listed components
/// (values in 0..K, matching the weight columns).  weight is the summed mass
/// divided by the total cell count; mean/cov are the weighted first and
/// second central moments.  Throws DataError when the pooled mass is zero.
GaussianSummary gaussian_approx(const std::vector<int>& components,
                                const std::vector<Matrix>& w,
                                const Dataset& data);

/// Fisher discriminant direction (C1+C2)^-1 (m1-m2), unit length.  Throws
/// DataError when the means coincide (direction undefined); merge_clusters
/// skips the Fisher projection in that case.
Vector fisher_coordinate(const GaussianSummary& g1, const GaussianSummary& g2);

/// Greedy agglomeration of the K latent components (summaries[k-1] describes
/// component k; w columns are {outlier} + components).  Repeatedly takes the
/// closest pair of current populations by Bhattacharyya distance of their
/// summaries: below d1 it merges outright; in [d1, d2) it merges only when
/// every configured projection of the pooled member cells fails to reject
/// unimodality at dip_alpha, excluding the pair from further consideration
/// otherwise; at or beyond d2 it stops.  Merged summaries are recomputed from
/// the cells via gaussian_approx.  Components whose summary weight is zero
/// never participate.  Deterministic given inputs and config.
MergeResult merge_clusters(const std::vector<GaussianSummary>& summaries,
                           const std::vector<Matrix>& w, const Dataset& data,
                           const MergeConfig& config);

/// Box/whisker levels reported by the CLI quantile tables.
inline const std::vector<double> kBoxWhiskerLevels = {0.01, 0.25, 0.75, 0.99};

/// Weighted quantiles per population and marker: entry (l, m) of matrix g is
/// the smallest observed value v with sum of weights of cells with value <= v
/// along marker m exceeding levels[l] * (total mass of population g).  The
/// alpha = 0 convention therefore yields the population minimum.  Populations
/// are the columns of w (including the outlier column).  Throws DataError on
/// an empty population, ConfigError for levels outside [0, 1).
std::vector<Matrix> population_quantiles(const std::vector<Matrix>& w,
                                         const Dataset& data,
                                         const std::vector<double>& levels);

}  // namespace hiermix
