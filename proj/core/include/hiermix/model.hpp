#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hiermix/linalg.hpp"

namespace hiermix {

/// A flow-cytometry style dataset: J samples, each an n_j x d matrix of cell
/// measurements, with shared marker (column) names.
struct Dataset {
  std::vector<Matrix> samples;
  std::vector<std::string> marker_names;
  std::vector<std::string> sample_ids;
  /// Set once percentile scaling has been applied; guards double scaling.
  bool scaled = false;

  int n_samples() const { return static_cast<int>(samples.size()); }
  int dim() const {
    return samples.empty() ? 0 : static_cast<int>(samples[0].cols());
  }
  std::int64_t total_cells() const;

  Vector pooled_mean() const;
  Matrix pooled_cov() const;

  /// Checks structural invariants (matching dims, finite values, n_j >= 1);
  /// throws DataError on violation.
  void validate() const;
};

/// Prior specification for the hierarchical mixture.
///
/// Component indexing convention used throughout the library: mixture
/// components are 1..K with 0 reserved for the shared outlier component;
/// per-component arrays of length K store component k at position k-1.
struct PriorSpec {
  int K = 0;
  int d = 0;

  // Per-component hyperparameters (length K).
  std::vector<Vector> t;       // location prior mean for theta_k
  std::vector<SpdMatrix> S;    // location prior covariance for theta_k
  std::vector<SpdMatrix> Q;    // inverse-Wishart scale for Sigma_theta_k
  std::vector<SpdMatrix> H;    // Wishart scale for Psi_k
  std::vector<double> lambda;  // exponential rate for nu_k

  // Shared degrees of freedom (per-component overrides optional).
  double n_theta = 0.0;  // > d + 1
  double n_psi = 0.0;    // > d - 1
  std::vector<double> n_theta_override;  // empty, or length K
  std::vector<double> n_psi_override;    // empty, or length K

  /// Dirichlet concentration over K+1 mixture weights; index 0 = outlier.
  Vector a;

  /// Activation penalty: prior on Z_j is proportional to
  /// exp(-c_s * sum_k Z_jk) restricted to sum_k Z_jk >= 1.
  double c_s = 1.0;

  /// Support floor for nu_k (integers >= nu_min); d + 2 keeps the latent
  /// cluster covariance Psi_k / (nu_k - d - 1) with a finite mean.
  int nu_min = 0;

  // Fixed outlier component, shared across samples.
  Vector outlier_mean;
  SpdMatrix outlier_cov;

  double n_theta_for(int k) const {
    return n_theta_override.empty() ? n_theta : n_theta_override[k];
  }
  double n_psi_for(int k) const {
    return n_psi_override.empty() ? n_psi : n_psi_override[k];
  }

  /// Checks hyperparameter validity (SPD matrices, positive weights and
  /// rates, dof bounds, nu_min >= d+2); throws ConfigError on violation.
  void validate() const;

  /// Weakly informative prior on roughly unit-scaled data: t_k at the given
  /// anchors (or all at 0.5 when anchors are empty), S_k = anchor_spread^2 I,
  /// Q_k/H_k at modest unit-scale defaults, flat Dirichlet, c_s = 1.
  /// The outlier component defaults to mean 0.5 per axis with covariance 4I
  /// and is typically overwritten from pooled data moments.
  static PriorSpec unit_scale(int K, int d,
                              const std::vector<Vector>& anchors = {},
                              double anchor_spread = 0.5);

  /// Replaces the outlier component with the pooled-data defaults: mean =
  /// pooled mean, covariance = 4x pooled covariance.
  void set_outlier_from_data(const Dataset& data);
};

/// Full state of the Markov chain.  Sizes: latent layer arrays K;
/// per-sample arrays J x K; pi[j] has K+1 entries with index 0 = outlier;
/// x[j][i] in {0..K} with 0 = outlier.
struct ChainState {
  // Latent layer (component k at index k-1).
  std::vector<Vector> theta;
  std::vector<SpdMatrix> sigma_theta;
  std::vector<SpdMatrix> psi;
  std::vector<int> nu;

  // Per-sample component parameters: mu[j][k-1], sigma[j][k-1].
  std::vector<std::vector<Vector>> mu;
  std::vector<std::vector<SpdMatrix>> sigma;

  // Mixture weights pi[j] (size K+1, index 0 = outlier; exact zeros on
  // inactive components), activations z[j][k-1], assignments x[j][i].
  std::vector<Vector> pi;
  std::vector<std::vector<std::uint8_t>> z;
  std::vector<std::vector<int>> x;

  // Fixed outlier parameters, copied from the prior so density evaluation
  // needs only the state.
  Vector outlier_mean;
  SpdMatrix outlier_cov;

  int K() const { return static_cast<int>(theta.size()); }
  int J() const { return static_cast<int>(pi.size()); }
  int dim() const { return theta.empty() ? 0 : static_cast<int>(theta[0].size()); }

  bool active(int j, int k) const { return z[j][k - 1] != 0; }
  int active_count(int j) const;

  /// Checks state invariants: simplex weights within 1e-12, exact zeros on
  /// inactive coordinates, at least one active component per sample,
  /// assignments consistent with activations, nu_k >= nu_min.  Throws
  /// NumericalError on violation.
  void validate(const PriorSpec& prior) const;
};

}  // namespace hiermix
