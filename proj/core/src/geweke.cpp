#include "hiermix/geweke.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <utility>

#include "hiermix/distributions.hpp"
#include "hiermix/errors.hpp"

namespace hiermix {

namespace {

using Functional = std::function<double(const ChainState&, const Dataset&)>;

// Scalar probes spanning every layer of the model plus the data itself, so
// an error in any conditional shows up in at least one comparison.
std::vector<std::pair<std::string, Functional>> build_functionals(int K,
                                                                  int d) {
  std::vector<std::pair<std::string, Functional>> fns;
  const auto add = [&](std::string name, Functional fn) {
    fns.emplace_back(std::move(name), std::move(fn));
  };

  for (int k = 0; k < K; ++k) {
    const std::string suffix = std::to_string(k + 1);
    add("theta" + suffix + "[0]",
        [k](const ChainState& s, const Dataset&) { return s.theta[k](0); });
    add("sigma_theta" + suffix + "[0,0]",
        [k](const ChainState& s, const Dataset&) {
          return s.sigma_theta[k].matrix()(0, 0);
        });
    add("psi" + suffix + "[0,0]", [k](const ChainState& s, const Dataset&) {
      return s.psi[k].matrix()(0, 0);
    });
    add("nu" + suffix, [k](const ChainState& s, const Dataset&) {
      return static_cast<double>(s.nu[k]);
    });
  }
  if (d >= 2) {
    add("theta1[1]",
        [](const ChainState& s, const Dataset&) { return s.theta[0](1); });
    add("psi1[0,1]", [](const ChainState& s, const Dataset&) {
      return s.psi[0].matrix()(0, 1);
    });
  }
  add("theta1[0]^2", [](const ChainState& s, const Dataset&) {
    return s.theta[0](0) * s.theta[0](0);
  });

  add("mean_pi0", [](const ChainState& s, const Dataset&) {
    double acc = 0.0;
    for (const Vector& pi : s.pi) acc += pi(0);
    return acc / static_cast<double>(s.J());
  });
  for (int k = 1; k <= K; ++k) {
    add("mean_pi" + std::to_string(k),
        [k](const ChainState& s, const Dataset&) {
          double acc = 0.0;
          for (const Vector& pi : s.pi) acc += pi(k);
          return acc / static_cast<double>(s.J());
        });
  }
  add("active_fraction", [](const ChainState& s, const Dataset&) {
    double acc = 0.0;
    for (const auto& zj : s.z)
      for (std::uint8_t zk : zj) acc += zk;
    return acc / static_cast<double>(s.J() * s.K());
  });

  add("mean_mu[0]", [](const ChainState& s, const Dataset&) {
    double acc = 0.0;
    for (const auto& mj : s.mu)
      for (const Vector& m : mj) acc += m(0);
    return acc / static_cast<double>(s.J() * s.K());
  });
  add("mu11[0]", [](const ChainState& s, const Dataset&) {
    return s.mu[0][0](0);
  });
  add("mean_sigma[0,0]", [](const ChainState& s, const Dataset&) {
    double acc = 0.0;
    for (const auto& sj : s.sigma)
      for (const SpdMatrix& sig : sj) acc += sig.matrix()(0, 0);
    return acc / static_cast<double>(s.J() * s.K());
  });
  add("sigma11[0,0]", [](const ChainState& s, const Dataset&) {
    return s.sigma[0][0].matrix()(0, 0);
  });
  add("mean_sigma_trace", [](const ChainState& s, const Dataset&) {
    double acc = 0.0;
    for (const auto& sj : s.sigma)
      for (const SpdMatrix& sig : sj) acc += sig.matrix().trace();
    return acc / static_cast<double>(s.J() * s.K());
  });
  add("log_det_sigma11", [](const ChainState& s, const Dataset&) {
    return s.sigma[0][0].log_det();
  });

  add("outlier_fraction", [](const ChainState& s, const Dataset&) {
    double outliers = 0.0, cells = 0.0;
    for (const auto& xj : s.x) {
      cells += static_cast<double>(xj.size());
      for (int xi : xj) outliers += xi == 0;
    }
    return outliers / cells;
  });
  add("mean_y[0]", [](const ChainState&, const Dataset& data) {
    double acc = 0.0, cells = 0.0;
    for (const Matrix& y : data.samples) {
      acc += y.col(0).sum();
      cells += static_cast<double>(y.rows());
    }
    return acc / cells;
  });
  if (d >= 2) {
    add("mean_y[1]", [](const ChainState&, const Dataset& data) {
      double acc = 0.0, cells = 0.0;
      for (const Matrix& y : data.samples) {
        acc += y.col(1).sum();
        cells += static_cast<double>(y.rows());
      }
      return acc / cells;
    });
  }
  add("var_y[0]", [](const ChainState&, const Dataset& data) {
    double acc = 0.0, acc2 = 0.0, cells = 0.0;
    for (const Matrix& y : data.samples) {
      acc += y.col(0).sum();
      acc2 += y.col(0).squaredNorm();
      cells += static_cast<double>(y.rows());
    }
    const double mean = acc / cells;
    return acc2 / cells - mean * mean;
  });
  return fns;
}

double mean_of(const std::vector<double>& xs) {
  double acc = 0.0;
  for (double x : xs) acc += x;
  return acc / static_cast<double>(xs.size());
}

// Standard error of the mean for i.i.d. records.
double iid_se(const std::vector<double>& xs) {
  const double m = mean_of(xs);
  double acc = 0.0;
  for (double x : xs) acc += (x - m) * (x - m);
  const double n = static_cast<double>(xs.size());
  return std::sqrt(acc / (n - 1.0) / n);
}

// Batch-means standard error for autocorrelated records.  Batches of
// length n^(2/3) (the rate-optimal growth for batch means) so slowly
// decaying autocorrelation is still absorbed within a batch.
double batch_means_se(const std::vector<double>& xs) {
  const std::size_t n = xs.size();
  const std::size_t len_target = static_cast<std::size_t>(
      std::floor(std::pow(static_cast<double>(n), 2.0 / 3.0)));
  const std::size_t batches =
      std::max<std::size_t>(2, n / std::max<std::size_t>(1, len_target));
  const std::size_t len = n / batches;
  std::vector<double> means(batches);
  for (std::size_t b = 0; b < batches; ++b) {
    double acc = 0.0;
    for (std::size_t i = b * len; i < (b + 1) * len; ++i) acc += xs[i];
    means[b] = acc / static_cast<double>(len);
  }
  return iid_se(means);
}

int draw_nu(double lambda, int nu_min, RngStream& rng) {
  return nu_min + static_cast<int>(std::floor(rng.exponential(lambda)));
}

}  // namespace

PriorSpec joint_check_prior(int K, int d) {
  PriorSpec prior = PriorSpec::unit_scale(K, d);
  for (int k = 0; k < K; ++k) {
    prior.S[k] = SpdMatrix::from_matrix(0.01 * Matrix::Identity(d, d));
    prior.Q[k] = SpdMatrix::from_matrix(0.05 * Matrix::Identity(d, d));
    prior.H[k] = SpdMatrix::from_matrix(0.10 * Matrix::Identity(d, d));
  }
  prior.n_theta = static_cast<double>(d) + 6.0;  // finite IW variance: > d+3
  prior.n_psi = static_cast<double>(d) + 4.0;
  prior.nu_min = d + 6;
  prior.lambda.assign(K, 0.5);
  prior.a = Vector::Ones(K + 1);
  prior.a(0) = 6.0;
  return prior;
}

ChainState draw_prior_state(const PriorSpec& prior, int n_samples,
                            RngStream& rng) {
  const int K = prior.K, d = prior.d;
  if (K > 16)
    throw ConfigError("draw_prior_state: activation enumeration needs K <= 16");

  ChainState state;
  state.outlier_mean = prior.outlier_mean;
  state.outlier_cov = prior.outlier_cov;
  for (int k = 0; k < K; ++k) {
    state.theta.push_back(draw_mvn(prior.t[k], prior.S[k], rng));
    state.sigma_theta.push_back(
        draw_inverse_wishart(prior.Q[k], prior.n_theta_for(k), rng));
    state.psi.push_back(draw_wishart(prior.H[k], prior.n_psi_for(k), rng));
    state.nu.push_back(draw_nu(prior.lambda[k], prior.nu_min, rng));
  }

  // Nonempty activation sets weighted by exp(-c_s * |set|).
  std::vector<double> mask_log_weights;
  for (int mask = 1; mask < (1 << K); ++mask)
    mask_log_weights.push_back(-prior.c_s *
                               static_cast<double>(__builtin_popcount(mask)));

  state.mu.resize(n_samples);
  state.sigma.resize(n_samples);
  state.pi.resize(n_samples);
  state.z.resize(n_samples);
  state.x.resize(n_samples);
  for (int j = 0; j < n_samples; ++j) {
    for (int k = 0; k < K; ++k) {
      state.mu[j].push_back(
          draw_mvn(state.theta[k], state.sigma_theta[k], rng));
      state.sigma[j].push_back(
          draw_inverse_wishart(state.psi[k], state.nu[k], rng));
    }

    const int mask = 1 + draw_categorical(mask_log_weights, rng);
    state.z[j].assign(K, 0);
    for (int k = 0; k < K; ++k) state.z[j][k] = (mask >> k) & 1;

    std::vector<int> slots = {0};
    for (int k = 1; k <= K; ++k)
      if (state.z[j][k - 1]) slots.push_back(k);
    Vector alpha(static_cast<Eigen::Index>(slots.size()));
    for (std::size_t s = 0; s < slots.size(); ++s)
      alpha(static_cast<Eigen::Index>(s)) = prior.a(slots[s]);
    const Vector drawn = draw_dirichlet(alpha, rng);
    state.pi[j] = Vector::Zero(K + 1);
    for (std::size_t s = 0; s < slots.size(); ++s)
      state.pi[j](slots[s]) = drawn(static_cast<Eigen::Index>(s));
  }
  (void)d;
  return state;
}

void regenerate_cells(const ChainState& state, Dataset* data,
                      RngStream& rng) {
  for (int j = 0; j < state.J(); ++j) {
    Matrix& cells = data->samples[j];
    for (Eigen::Index i = 0; i < cells.rows(); ++i) {
      const int x = state.x[j][static_cast<std::size_t>(i)];
      const Vector cell =
          x == 0 ? draw_mvn(state.outlier_mean, state.outlier_cov, rng)
                 : draw_mvn(state.mu[j][x - 1], state.sigma[j][x - 1], rng);
      cells.row(i) = cell.transpose();
    }
  }
}

GewekeReport getting_it_right(const PriorSpec& prior,
                              const std::vector<int>& n_cells, int iterations,
                              std::uint64_t seed, SamplerMutation mutation) {
  prior.validate();
  if (iterations < 100)
    throw ConfigError("getting_it_right: need at least 100 iterations");
  if (n_cells.empty())
    throw ConfigError("getting_it_right: need at least one sample");
  const int J = static_cast<int>(n_cells.size());
  const int K = prior.K, d = prior.d;

  const auto functionals = build_functionals(K, d);
  const std::size_t n_fns = functionals.size();

  const auto make_dataset = [&]() {
    Dataset data;
    for (int m = 0; m < d; ++m)
      data.marker_names.push_back("m" + std::to_string(m));
    for (int j = 0; j < J; ++j) {
      data.samples.emplace_back(n_cells[j], d);
      data.sample_ids.push_back("g" + std::to_string(j));
    }
    return data;
  };
  const auto draw_assignments = [&](ChainState* state, RngStream& rng) {
    for (int j = 0; j < J; ++j) {
      int last_active = 0;
      for (int k = K; k > 0; --k) {
        if (state->pi[j](k) > 0.0) {
          last_active = k;
          break;
        }
      }
      state->x[j].resize(static_cast<std::size_t>(n_cells[j]));
      for (int i = 0; i < n_cells[j]; ++i) {
        const double u = rng.uniform();
        double acc = 0.0;
        int x = last_active;
        for (int k = 0; k <= K; ++k) {
          acc += state->pi[j](k);
          if (u < acc) {
            x = k;
            break;
          }
        }
        state->x[j][static_cast<std::size_t>(i)] = x;
      }
    }
  };

  std::vector<std::vector<double>> forward(n_fns), gibbs(n_fns);
  for (auto& rec : forward) rec.reserve(static_cast<std::size_t>(iterations));
  for (auto& rec : gibbs) rec.reserve(static_cast<std::size_t>(iterations));

  // Chain (a): independent draws from the joint prior of parameters and data.
  {
    RngStream rng(seed, 0);
    Dataset data = make_dataset();
    for (int it = 0; it < iterations; ++it) {
      ChainState state = draw_prior_state(prior, J, rng);
      draw_assignments(&state, rng);
      regenerate_cells(state, &data, rng);
      for (std::size_t f = 0; f < n_fns; ++f)
        forward[f].push_back(functionals[f].second(state, data));
    }
  }

  // Chain (b): one full Gibbs sweep on the data, then fresh data given the
  // state.  Started from an exact joint draw, so a correct sampler keeps the
  // chain exactly stationary.
  {
    RngStream rng(seed, 1);
    Dataset data = make_dataset();
    ChainState state = draw_prior_state(prior, J, rng);
    draw_assignments(&state, rng);
    regenerate_cells(state, &data, rng);
    SamplerCounters counters;
    for (int it = 0; it < iterations; ++it) {
      for (int j = 0; j < J; ++j) {
        const ComponentSuffStats stats =
            update_assignments(state, data, j, rng);
        update_pi(state, prior, j, stats, rng);
        update_component_params(state, j, stats, rng, &counters, mutation);
        update_activation(state, prior, j, stats, rng, &counters);
      }
      update_latent_layer(state, prior, /*rj_enabled=*/true, rng);
      update_nu(state, prior, /*rj_enabled=*/true, /*halfwidth=*/2, rng,
                &counters);
      regenerate_cells(state, &data, rng);
      for (std::size_t f = 0; f < n_fns; ++f)
        gibbs[f].push_back(functionals[f].second(state, data));
    }
  }

  GewekeReport report;
  report.iterations = iterations;
  for (std::size_t f = 0; f < n_fns; ++f) {
    GewekeFunctional fn;
    fn.name = functionals[f].first;
    fn.forward_mean = mean_of(forward[f]);
    fn.forward_se = iid_se(forward[f]);
    fn.gibbs_mean = mean_of(gibbs[f]);
    fn.gibbs_se = batch_means_se(gibbs[f]);
    const double scale = std::sqrt(fn.forward_se * fn.forward_se +
                                   fn.gibbs_se * fn.gibbs_se);
    const double gap = fn.forward_mean - fn.gibbs_mean;
    fn.z = scale > 0.0 ? gap / scale : (gap == 0.0 ? 0.0 : 1e300);
    report.functionals.push_back(fn);
    report.max_abs_z = std::max(report.max_abs_z, std::abs(fn.z));
  }
  return report;
}

}  // namespace hiermix
