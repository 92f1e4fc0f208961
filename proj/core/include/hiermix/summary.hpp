#pragma once

#include <string>
#include <vector>

#include "hiermix/linalg.hpp"
#include "hiermix/mcmc.hpp"
#include "hiermix/merge.hpp"
#include "hiermix/synthetic.hpp"

namespace hiermix {

/// Point estimates (trace means), central 95% credible intervals, and
/// activation probabilities computed from a recorded trace.  Latent-cluster
/// covariances are reported on the within-sample scale psi / (nu - d - 1).
struct PosteriorSummary {
  int K = 0;
  int J = 0;
  int d = 0;

  // Latent layer, component k at index k - 1; lower/upper are the 2.5% and
  // 97.5% empirical quantiles of the thinned draws, entry by entry.
  std::vector<Vector> theta_mean, theta_median, theta_lower, theta_upper;
  std::vector<Matrix> latent_cov_mean, latent_cov_median, latent_cov_lower,
      latent_cov_upper;
  std::vector<Matrix> psi_mean;
  std::vector<double> nu_mean;

  // Per-sample point estimates.
  std::vector<std::vector<Vector>> mu_mean;     // J x K
  std::vector<std::vector<Matrix>> sigma_mean;  // J x K
  std::vector<Vector> pi_mean;                  // J, size K + 1
  std::vector<Vector> activation_probability;   // J, size K
};

/// Reduces a trace to means, empirical quantiles, and activation
/// frequencies.  Throws DataError on an empty trace.
PosteriorSummary summarize(const Trace& trace);

/// One row of a recovery table: a latent parameter entry, its true value,
/// and the posterior median and central 95% interval.
struct RecoveryRow {
  std::string parameter;  // "theta" or "latent_cov"
  int component = 0;      // 1-based
  int row = 0;
  int col = 0;  // equals row for vector entries
  double truth = 0.0;
  double median = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  bool covered = false;  // lower <= truth <= upper
};

/// Estimate-versus-truth rows for every theta entry and every upper-triangle
/// entry of the within-sample latent covariances.  Components are matched by
/// index, which assumes the fit was anchored near the generator's layout.
std::vector<RecoveryRow> recovery_table(const PosteriorSummary& summary,
                                        const GroundTruth& truth);

/// J x M matrix of posterior-mean population proportions: column m sums the
/// mean mixing weights of the components merged into population
/// `merge.population_ids[m]`.  Row sums plus the outlier proportion give 1.
Matrix population_sizes(const Trace& trace, const MergeResult& merge);

}  // namespace hiermix
