#pragma once

#include "hiermix/linalg.hpp"
#include "hiermix/model.hpp"

namespace hiermix {

/// Multivariate normal log density via the cached Cholesky factor.
double log_gaussian(const Vector& y, const Vector& mu, const SpdMatrix& sigma);

/// Inverse-Wishart log density of x under scale psi and dof nu.
double log_inverse_wishart(const SpdMatrix& x, const SpdMatrix& psi,
                           double nu);

/// Wishart log density of x under scale v and dof n.
double log_wishart(const SpdMatrix& x, const SpdMatrix& v, double n);

/// Dirichlet log density; x and alpha must have equal length, x on the open
/// simplex.
double log_dirichlet(const Vector& x, const Vector& alpha);

/// Beta log density.
double log_beta_pdf(double x, double a, double b);

/// Normalized log pmf of the discretized exponential prior on nu: support is
/// the integers >= nu_min, p(nu) proportional to exp(-lambda * nu).
double log_nu_prior(int nu, double lambda, int nu_min);

/// Log of the sample-j mixture density at y: active components plus the
/// shared outlier component, combined by log-sum-exp.
double log_mixture_density(const Vector& y, const ChainState& state, int j);

/// Log prior density of the full chain state: latent layer terms, active
/// per-sample component terms, Dirichlet weight terms restricted to active
/// coordinates, and the activation penalty -c_s * sum Z_jk.  The activation
/// term is used unnormalized (its nonempty-support normalization constant,
/// which depends only on c_s and K, is omitted).
double log_prior(const ChainState& state, const PriorSpec& prior);

/// Complete-data log likelihood: sum over cells of
/// log pi_{j,x_ij} + log N(y_ij; component x_ij).
double log_complete_likelihood(const ChainState& state, const Dataset& data);

}  // namespace hiermix
