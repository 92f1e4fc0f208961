#include "hiermix/density.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include "hiermix/errors.hpp"

namespace hiermix {

namespace {

constexpr double kLog2Pi = 1.8378770664093453;  // log(2*pi)
constexpr double kLog2 = 0.6931471805599453;

double log_sum_exp(const std::vector<double>& terms) {
  double max_term = -std::numeric_limits<double>::infinity();
  for (double term : terms) {
    if (term > max_term) max_term = term;
  }
  if (!std::isfinite(max_term)) {
    return max_term;
  }
  double total = 0.0;
  for (double term : terms) {
    total += std::exp(term - max_term);
  }
  return max_term + std::log(total);
}

}  // namespace

double log_gaussian(const Vector& y, const Vector& mu, const SpdMatrix& sigma) {
  const int d = static_cast<int>(y.size());
  const double quad = sigma.quad_inv(y - mu);
  return -0.5 * (d * kLog2Pi + sigma.log_det() + quad);
}

double log_inverse_wishart(const SpdMatrix& x, const SpdMatrix& psi,
                           double nu) {
  const int d = x.dim();
  const double trace_term = x.solve(psi.matrix()).trace();
  return 0.5 * nu * psi.log_det() - 0.5 * nu * d * kLog2 -
         log_mv_gamma(d, 0.5 * nu) - 0.5 * (nu + d + 1) * x.log_det() -
         0.5 * trace_term;
}

double log_wishart(const SpdMatrix& x, const SpdMatrix& v, double n) {
  const int d = x.dim();
  const double trace_term = v.solve(x.matrix()).trace();
  return 0.5 * (n - d - 1) * x.log_det() - 0.5 * trace_term -
         0.5 * n * d * kLog2 - 0.5 * n * v.log_det() -
         log_mv_gamma(d, 0.5 * n);
}

double log_dirichlet(const Vector& x, const Vector& alpha) {
  if (x.size() != alpha.size()) {
    throw NumericalError("log_dirichlet: length mismatch");
  }
  double result = std::lgamma(alpha.sum());
  for (int i = 0; i < x.size(); ++i) {
    result += (alpha(i) - 1.0) * std::log(x(i)) - std::lgamma(alpha(i));
  }
  return result;
}

double log_beta_pdf(double x, double a, double b) {
  return (a - 1.0) * std::log(x) + (b - 1.0) * std::log1p(-x) -
         (std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b));
}

double log_nu_prior(int nu, double lambda, int nu_min) {
  if (nu < nu_min) {
    return -std::numeric_limits<double>::infinity();
  }
  // p(nu) = exp(-lambda*nu) / sum_{m >= nu_min} exp(-lambda*m)
  //       = exp(-lambda*(nu - nu_min)) * (1 - exp(-lambda)).
  return -lambda * (nu - nu_min) + std::log1p(-std::exp(-lambda));
}

double log_mixture_density(const Vector& y, const ChainState& state, int j) {
  std::vector<double> terms;
  terms.reserve(state.K() + 1);
  if (state.pi[j](0) > 0.0) {
    terms.push_back(std::log(state.pi[j](0)) +
                    log_gaussian(y, state.outlier_mean, state.outlier_cov));
  }
  for (int k = 1; k <= state.K(); ++k) {
    if (state.active(j, k) && state.pi[j](k) > 0.0) {
      terms.push_back(std::log(state.pi[j](k)) +
                      log_gaussian(y, state.mu[j][k - 1], state.sigma[j][k - 1]));
    }
  }
  if (terms.empty()) {
    throw NumericalError("log_mixture_density: no positive-weight components");
  }
  return log_sum_exp(terms);
}

double log_prior(const ChainState& state, const PriorSpec& prior) {
  double total = 0.0;
  // Latent layer.
  for (int k = 0; k < state.K(); ++k) {
    total += log_gaussian(state.theta[k], prior.t[k], prior.S[k]);
    total += log_inverse_wishart(state.sigma_theta[k], prior.Q[k],
                                 prior.n_theta_for(k));
    total += log_wishart(state.psi[k], prior.H[k], prior.n_psi_for(k));
    total += log_nu_prior(state.nu[k], prior.lambda[k], prior.nu_min);
  }
  // Per-sample layer.
  for (int j = 0; j < state.J(); ++j) {
    int n_active = 0;
    for (int k = 1; k <= state.K(); ++k) {
      if (!state.active(j, k)) continue;
      ++n_active;
      total += log_gaussian(state.mu[j][k - 1], state.theta[k - 1],
                            state.sigma_theta[k - 1]);
      total += log_inverse_wishart(state.sigma[j][k - 1], state.psi[k - 1],
                                   static_cast<double>(state.nu[k - 1]));
    }
    // Dirichlet over the active sub-simplex: outlier plus active components.
    Vector weights(n_active + 1);
    Vector conc(n_active + 1);
    weights(0) = state.pi[j](0);
    conc(0) = prior.a(0);
    int pos = 1;
    for (int k = 1; k <= state.K(); ++k) {
      if (state.active(j, k)) {
        weights(pos) = state.pi[j](k);
        conc(pos) = prior.a(k);
        ++pos;
      }
    }
    total += log_dirichlet(weights, conc);
    total -= prior.c_s * n_active;
  }
  return total;
}

double log_complete_likelihood(const ChainState& state, const Dataset& data) {
  double total = 0.0;
  for (int j = 0; j < state.J(); ++j) {
    const Matrix& sample = data.samples[j];
    // Per-component log weight + normalization terms are shared across cells.
    const int n = static_cast<int>(sample.rows());
    for (int i = 0; i < n; ++i) {
      const int k = state.x[j][i];
      const Vector y = sample.row(i).transpose();
      if (k == 0) {
        total += std::log(state.pi[j](0)) +
                 log_gaussian(y, state.outlier_mean, state.outlier_cov);
      } else {
        total += std::log(state.pi[j](k)) +
                 log_gaussian(y, state.mu[j][k - 1], state.sigma[j][k - 1]);
      }
    }
  }
  return total;
}

}  // namespace hiermix
