#include "hiermix/mcmc.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <condition_variable>
#include <exception>
#include <functional>
#include <limits>
#include <mutex>
#include <numeric>
#include <sstream>
#include <thread>

#include "hiermix/density.hpp"
#include "hiermix/em.hpp"
#include "hiermix/errors.hpp"

namespace hiermix {

namespace {

constexpr double kLog2Pi = 1.8378770664093453;
constexpr double kLog2 = 0.6931471805599453;

}  // namespace

void McmcConfig::validate() const {
  if (burn_in < 0) throw ConfigError("McmcConfig: burn_in must be >= 0");
  if (production < 1) throw ConfigError("McmcConfig: production must be >= 1");
  if (thin < 1) throw ConfigError("McmcConfig: thin must be >= 1");
  if (nu_proposal_halfwidth < 1) {
    throw ConfigError("McmcConfig: nu_proposal_halfwidth must be >= 1");
  }
  if (!(activation_threshold > 0.0 && activation_threshold < 1.0)) {
    throw ConfigError("McmcConfig: activation_threshold must lie in (0, 1)");
  }
  if (workers < 1) throw ConfigError("McmcConfig: workers must be >= 1");
}

void SamplerCounters::merge(const SamplerCounters& other) {
  nu_proposals += other.nu_proposals;
  nu_accepts += other.nu_accepts;
  birth_proposals += other.birth_proposals;
  birth_accepts += other.birth_accepts;
  death_proposals += other.death_proposals;
  death_accepts += other.death_accepts;
  param_draw_failures += other.param_draw_failures;
}

double Trace::activation_probability(int j, int k) const {
  return static_cast<double>(activation_counts[j][k - 1]) /
         static_cast<double>(production);
}

RjLogRatio rj_birth_log_ratio(int n_cells, double w, double a_k, double a_rest,
                              double c_s, int n_active) {
  RjLogRatio r;
  const double log_1mw = std::log1p(-w);
  r.activation = -c_s;
  // Ratio of the restricted Dirichlet priors: the birth state has the extra
  // coordinate w while every pre-birth coordinate shrinks by 1-w; the
  // pre-birth simplex has n_active + 1 coordinates (outlier included).
  r.dirichlet = std::lgamma(a_rest + a_k) - std::lgamma(a_rest) -
                std::lgamma(a_k) + (a_k - 1.0) * std::log(w) +
                (a_rest - n_active - 1.0) * log_1mw;
  // Complete-data likelihood: no cell is assigned to the new component, so
  // every cell's weight factor shrinks by 1-w.
  r.likelihood = n_cells * log_1mw;
  // Volume factor of (pi, w) -> pi': the n_active free coordinates each
  // scale by 1-w.
  r.jacobian = n_active * log_1mw;
  r.proposal = -log_beta_pdf(w, a_k, a_rest);
  return r;
}

RjLogRatio rj_death_log_ratio(int n_cells, double w, double a_k, double a_rest,
                              double c_s, int n_active) {
  // Exact reverse of a birth that would have re-created this state.
  RjLogRatio birth =
      rj_birth_log_ratio(n_cells, w, a_k, a_rest, c_s, n_active - 1);
  RjLogRatio r;
  r.activation = -birth.activation;
  r.dirichlet = -birth.dirichlet;
  r.likelihood = -birth.likelihood;
  r.jacobian = -birth.jacobian;
  r.proposal = -birth.proposal;
  return r;
}

double nu_proposal_probability(int from, int to, int halfwidth, int nu_min) {
  int paths = 0;
  for (int delta = -halfwidth; delta <= halfwidth; ++delta) {
    if (delta == 0) continue;
    const int raw = from + delta;
    const int landed = raw < nu_min ? 2 * nu_min - raw : raw;
    if (landed == to) ++paths;
  }
  return static_cast<double>(paths) / (2.0 * halfwidth);
}

ComponentSuffStats update_assignments(ChainState& state, const Dataset& data,
                                      int j, RngStream& rng) {
  const int K = state.K();
  const int d = state.dim();
  const Matrix& sample = data.samples[j];
  const int n = static_cast<int>(sample.rows());

  ComponentSuffStats stats;
  stats.counts.assign(K + 1, 0);
  stats.sums.assign(K + 1, Vector::Zero(d));
  stats.scatters.assign(K + 1, Matrix::Zero(d, d));

  // Candidate components with positive weight, in fixed order: outlier
  // first, then active components ascending.
  struct Candidate {
    int k;
    double log_weight;  // log pi + Gaussian normalization
    const Vector* mean;
    const Matrix* chol;
  };
  std::vector<Candidate> candidates;
  candidates.reserve(K + 1);
  if (state.pi[j](0) > 0.0) {
    candidates.push_back({0,
                          std::log(state.pi[j](0)) -
                              0.5 * (d * kLog2Pi + state.outlier_cov.log_det()),
                          &state.outlier_mean, &state.outlier_cov.chol()});
  }
  for (int k = 1; k <= K; ++k) {
    if (state.active(j, k) && state.pi[j](k) > 0.0) {
      candidates.push_back(
          {k,
           std::log(state.pi[j](k)) -
               0.5 * (d * kLog2Pi + state.sigma[j][k - 1].log_det()),
           &state.mu[j][k - 1], &state.sigma[j][k - 1].chol()});
    }
  }
  if (candidates.empty()) {
    throw NumericalError("update_assignments: no positive-weight components");
  }

  Vector y(d);
  Vector diff(d);
  for (int i = 0; i < n; ++i) {
    y = sample.row(i).transpose();
    int chosen = candidates[0].k;
    double best = -std::numeric_limits<double>::infinity();
    for (const Candidate& cand : candidates) {
      diff = y - *cand.mean;
      cand.chol->triangularView<Eigen::Lower>().solveInPlace(diff);
      const double gumbel = -std::log(-std::log(rng.uniform()));
      const double score = cand.log_weight - 0.5 * diff.squaredNorm() + gumbel;
      if (score > best) {
        best = score;
        chosen = cand.k;
      }
    }
    state.x[j][i] = chosen;
    stats.counts[chosen] += 1;
    stats.sums[chosen] += y;
    stats.scatters[chosen] += y * y.transpose();
  }
  return stats;
}

void update_pi(ChainState& state, const PriorSpec& prior, int j,
               const ComponentSuffStats& stats, RngStream& rng) {
  const int K = state.K();
  std::vector<int> members;  // outlier plus active components
  members.reserve(K + 1);
  members.push_back(0);
  for (int k = 1; k <= K; ++k) {
    if (state.active(j, k)) members.push_back(k);
  }
  Vector conc(members.size());
  for (std::size_t pos = 0; pos < members.size(); ++pos) {
    conc(pos) = prior.a(members[pos]) + stats.counts[members[pos]];
  }
  const Vector draw = draw_dirichlet(conc, rng);
  state.pi[j].setZero();
  for (std::size_t pos = 0; pos < members.size(); ++pos) {
    state.pi[j](members[pos]) = draw(pos);
  }
}

void update_component_params(ChainState& state, int j,
                             const ComponentSuffStats& stats, RngStream& rng,
                             SamplerCounters* counters,
                             SamplerMutation mutation) {
  const int K = state.K();
  const int d = state.dim();
  for (int k = 1; k <= K; ++k) {
    const SpdMatrix& sigma_theta = state.sigma_theta[k - 1];
    const Vector& theta = state.theta[k - 1];
    const SpdMatrix& psi = state.psi[k - 1];
    const double nu = static_cast<double>(state.nu[k - 1]);
    const int count = stats.counts[k];
    try {
      Vector fresh_mu(d);
      if (count == 0) {
        // No cells (inactive component, or active but empty): the
        // conditional is the hierarchical prior itself.
        fresh_mu = draw_mvn(theta, sigma_theta, rng);
        Matrix scale = psi.matrix();
        if (mutation == SamplerMutation::drop_sigma_prior_scale) {
          scale = Matrix::Zero(d, d);
        }
        SpdMatrix fresh_sigma =
            draw_inverse_wishart(SpdMatrix::from_matrix(scale), nu, rng);
        state.mu[j][k - 1] = fresh_mu;
        state.sigma[j][k - 1] = fresh_sigma;
        continue;
      }
      // Location: N(V (Sigma_theta^-1 theta + Sigma^-1 sum), V) with
      // V = (Sigma_theta^-1 + count Sigma^-1)^-1, evaluated in the
      // inverse-free form V = C (Sigma_theta + C)^-1 Sigma_theta where
      // C = Sigma / count.
      const Matrix c = state.sigma[j][k - 1].matrix() / count;
      const SpdMatrix m = SpdMatrix::from_matrix(sigma_theta.matrix() + c);
      const Vector ybar = stats.sums[k] / count;
      const Vector mean = c * m.solve(theta) + sigma_theta.matrix() * m.solve(ybar);
      const SpdMatrix v = SpdMatrix::from_matrix(c * m.solve(sigma_theta.matrix()));
      fresh_mu = draw_mvn(mean, v, rng);
      // Scale: prior scale plus the scatter about the freshly drawn mean.
      Matrix scatter = stats.scatters[k] -
                       stats.sums[k] * fresh_mu.transpose() -
                       fresh_mu * stats.sums[k].transpose() +
                       count * fresh_mu * fresh_mu.transpose();
      Matrix scale = psi.matrix() + scatter;
      if (mutation == SamplerMutation::drop_sigma_prior_scale) {
        scale = scatter;
      }
      SpdMatrix fresh_sigma = draw_inverse_wishart(SpdMatrix::from_matrix(scale),
                                                   nu + count, rng);
      state.mu[j][k - 1] = fresh_mu;
      state.sigma[j][k - 1] = fresh_sigma;
    } catch (const NumericalError&) {
      // Retain the previous values; the chain stays valid and the event is
      // reported through the counters.
      if (counters != nullptr) counters->param_draw_failures += 1;
    }
  }
}

void update_activation(ChainState& state, const PriorSpec& prior, int j,
                       const ComponentSuffStats& stats, RngStream& rng,
                       SamplerCounters* counters) {
  const int K = state.K();
  const int n_cells = static_cast<int>(state.x[j].size());
  const int k = 1 + static_cast<int>(rng.uniform_int(K));
  if (state.active(j, k)) {
    // Death is only available for components holding no cells.
    if (stats.counts[k] != 0) return;
    if (counters != nullptr) counters->death_proposals += 1;
    const int n_active = state.active_count(j);
    if (n_active <= 1) return;  // would empty Z_j: outside the prior support
    const double w = state.pi[j](k);
    double a_rest = prior.a(0);
    for (int l = 1; l <= K; ++l) {
      if (l != k && state.active(j, l)) a_rest += prior.a(l);
    }
    const RjLogRatio ratio =
        rj_death_log_ratio(n_cells, w, prior.a(k), a_rest, prior.c_s, n_active);
    if (std::log(rng.uniform()) < ratio.total()) {
      state.z[j][k - 1] = 0;
      state.pi[j] /= 1.0 - w;
      state.pi[j](k) = 0.0;
      if (counters != nullptr) counters->death_accepts += 1;
    }
  } else {
    if (counters != nullptr) counters->birth_proposals += 1;
    double a_rest = prior.a(0);
    for (int l = 1; l <= K; ++l) {
      if (state.active(j, l)) a_rest += prior.a(l);
    }
    const int n_active = state.active_count(j);
    const double w = rng.beta(prior.a(k), a_rest);
    const RjLogRatio ratio =
        rj_birth_log_ratio(n_cells, w, prior.a(k), a_rest, prior.c_s, n_active);
    if (std::log(rng.uniform()) < ratio.total()) {
      state.pi[j] *= 1.0 - w;
      state.pi[j](k) = w;
      state.z[j][k - 1] = 1;
      if (counters != nullptr) counters->birth_accepts += 1;
    }
  }
}

void update_latent_layer(ChainState& state, const PriorSpec& prior,
                         bool rj_enabled, RngStream& rng) {
  const int K = state.K();
  const int J = state.J();
  const int d = state.dim();
  for (int k = 1; k <= K; ++k) {
    std::vector<int> contributing;
    contributing.reserve(J);
    for (int j = 0; j < J; ++j) {
      if (!rj_enabled || state.active(j, k)) contributing.push_back(j);
    }
    const int m = static_cast<int>(contributing.size());

    // theta_k | mu, Sigma_theta: normal-normal conjugacy, inverse-free form.
    if (m == 0) {
      state.theta[k - 1] = draw_mvn(prior.t[k - 1], prior.S[k - 1], rng);
    } else {
      Vector mu_bar = Vector::Zero(d);
      for (int j : contributing) mu_bar += state.mu[j][k - 1];
      mu_bar /= m;
      const Matrix c = state.sigma_theta[k - 1].matrix() / m;
      const SpdMatrix msum = SpdMatrix::from_matrix(prior.S[k - 1].matrix() + c);
      const Vector mean =
          c * msum.solve(prior.t[k - 1]) +
          prior.S[k - 1].matrix() * msum.solve(mu_bar);
      const SpdMatrix v =
          SpdMatrix::from_matrix(c * msum.solve(prior.S[k - 1].matrix()));
      state.theta[k - 1] = draw_mvn(mean, v, rng);
    }

    // Sigma_theta_k | mu, theta: inverse-Wishart with the scatter of the
    // per-sample locations about the fresh theta_k.
    Matrix st_scale = prior.Q[k - 1].matrix();
    for (int j : contributing) {
      const Vector diff = state.mu[j][k - 1] - state.theta[k - 1];
      st_scale += diff * diff.transpose();
    }
    state.sigma_theta[k - 1] = draw_inverse_wishart(
        SpdMatrix::from_matrix(st_scale), prior.n_theta_for(k - 1) + m, rng);

    // Psi_k | Sigma_jk, nu_k: Wishart with precision-accumulated scale.
    Matrix precision_sum = prior.H[k - 1].inverse();
    for (int j : contributing) {
      precision_sum += state.sigma[j][k - 1].inverse();
    }
    const SpdMatrix psi_scale = SpdMatrix::from_matrix(
        SpdMatrix::from_matrix(precision_sum).inverse());
    state.psi[k - 1] = draw_wishart(
        psi_scale, prior.n_psi_for(k - 1) + static_cast<double>(m) * state.nu[k - 1],
        rng);
  }
}

void update_nu(ChainState& state, const PriorSpec& prior, bool rj_enabled,
               int halfwidth, RngStream& rng, SamplerCounters* counters) {
  const int K = state.K();
  const int J = state.J();
  const int d = state.dim();
  for (int k = 1; k <= K; ++k) {
    if (counters != nullptr) counters->nu_proposals += 1;
    const int current = state.nu[k - 1];
    // Symmetric step in {-h..h} \ {0}, reflected at nu_min.
    int delta = static_cast<int>(rng.uniform_int(2 * halfwidth)) - halfwidth;
    if (delta >= 0) delta += 1;
    const int raw = current + delta;
    const int proposed = raw < prior.nu_min ? 2 * prior.nu_min - raw : raw;
    if (proposed == current) {
      // Reflection folded the step back onto the current value: a no-op
      // move, accepted trivially.
      if (counters != nullptr) counters->nu_accepts += 1;
      continue;
    }
    const double d_nu = static_cast<double>(proposed - current);
    double log_ratio = -prior.lambda[k - 1] * d_nu;
    int m = 0;
    double sum_log_det_sigma = 0.0;
    for (int j = 0; j < J; ++j) {
      if (rj_enabled && !state.active(j, k)) continue;
      ++m;
      sum_log_det_sigma += state.sigma[j][k - 1].log_det();
    }
    if (m > 0) {
      // Inverse-Wishart density ratio in nu, for fixed Sigma_jk and Psi_k:
      // the trace terms cancel.
      log_ratio += 0.5 * d_nu *
                   (m * (state.psi[k - 1].log_det() - d * kLog2) -
                    sum_log_det_sigma);
      log_ratio -= m * (log_mv_gamma(d, 0.5 * proposed) -
                        log_mv_gamma(d, 0.5 * current));
    }
    // Reflection makes the proposal asymmetric near the boundary.
    log_ratio +=
        std::log(nu_proposal_probability(proposed, current, halfwidth,
                                         prior.nu_min)) -
        std::log(nu_proposal_probability(current, proposed, halfwidth,
                                         prior.nu_min));
    if (std::log(rng.uniform()) < log_ratio) {
      state.nu[k - 1] = proposed;
      if (counters != nullptr) counters->nu_accepts += 1;
    }
  }
}

// A minimal persistent pool: parallel_for hands out task indices through an
// atomic counter so scheduling never affects results (each index owns its
// own RNG stream and state slice).
struct Sampler::ThreadPool {
  explicit ThreadPool(int n_threads) {
    threads_.reserve(n_threads);
    for (int t = 0; t < n_threads; ++t) {
      threads_.emplace_back([this] { worker_loop(); });
    }
  }

  ~ThreadPool() {
    {
      std::unique_lock<std::mutex> lock(mutex_);
      shutdown_ = true;
    }
    start_cv_.notify_all();
    for (auto& thread : threads_) thread.join();
  }

  void parallel_for(int n_tasks, const std::function<void(int)>& fn) {
    {
      std::unique_lock<std::mutex> lock(mutex_);
      fn_ = &fn;
      n_tasks_ = n_tasks;
      next_task_.store(0, std::memory_order_relaxed);
      remaining_ = n_tasks;
      error_ = nullptr;
      ++generation_;
    }
    start_cv_.notify_all();
    std::unique_lock<std::mutex> lock(mutex_);
    done_cv_.wait(lock, [this] { return remaining_ == 0; });
    fn_ = nullptr;
    if (error_) std::rethrow_exception(error_);
  }

 private:
  void worker_loop() {
    std::uint64_t seen_generation = 0;
    for (;;) {
      const std::function<void(int)>* fn = nullptr;
      int n_tasks = 0;
      {
        std::unique_lock<std::mutex> lock(mutex_);
        start_cv_.wait(lock, [&] {
          return shutdown_ || generation_ != seen_generation;
        });
        if (shutdown_) return;
        seen_generation = generation_;
        fn = fn_;
        n_tasks = n_tasks_;
      }
      int completed = 0;
      for (;;) {
        const int task = next_task_.fetch_add(1, std::memory_order_relaxed);
        if (task >= n_tasks) break;
        try {
          (*fn)(task);
        } catch (...) {
          std::unique_lock<std::mutex> lock(mutex_);
          if (!error_) error_ = std::current_exception();
        }
        ++completed;
      }
      std::unique_lock<std::mutex> lock(mutex_);
      remaining_ -= completed;
      if (remaining_ == 0) done_cv_.notify_all();
    }
  }

  std::vector<std::thread> threads_;
  std::mutex mutex_;
  std::condition_variable start_cv_;
  std::condition_variable done_cv_;
  const std::function<void(int)>* fn_ = nullptr;
  int n_tasks_ = 0;
  std::atomic<int> next_task_{0};
  int remaining_ = 0;
  std::uint64_t generation_ = 0;
  bool shutdown_ = false;
  std::exception_ptr error_;
};

Sampler::Sampler(Dataset data, PriorSpec prior, McmcConfig config)
    : data_(std::move(data)),
      prior_(std::move(prior)),
      config_(std::move(config)),
      latent_rng_(config_.seed, 0),
      predictive_rng_(config_.seed, static_cast<std::uint64_t>(data_.n_samples()) + 1) {
  config_.validate();
  data_.validate();
  prior_.validate();
  if (prior_.d != data_.dim()) {
    throw ConfigError("Sampler: prior dimension does not match data");
  }
  const int J = data_.n_samples();
  for (int id : config_.predictive_sample_ids) {
    if (id < 0 || id >= J) {
      throw ConfigError("Sampler: predictive sample index out of range");
    }
  }
  sample_rngs_.reserve(J);
  for (int j = 0; j < J; ++j) {
    sample_rngs_.emplace_back(config_.seed, static_cast<std::uint64_t>(j) + 1);
  }
  stats_.resize(J);
  sample_counters_.resize(J);
  if (config_.workers > 1) {
    pool_ = std::make_unique<ThreadPool>(config_.workers);
  }
}

Sampler::~Sampler() = default;

namespace {

// Matches k-means centers to the prior anchors so informative priors keep
// their intended component identities: exhaustive assignment for small K,
// greedy nearest-unused otherwise.  Returns perm with center perm[k] assigned
// to component k.
std::vector<int> match_centers_to_anchors(const std::vector<Vector>& centers,
                                          const std::vector<Vector>& anchors) {
  const int k_count = static_cast<int>(centers.size());
  std::vector<int> perm(k_count);
  std::iota(perm.begin(), perm.end(), 0);
  auto cost = [&](const std::vector<int>& p) {
    double total = 0.0;
    for (int k = 0; k < k_count; ++k) {
      total += (centers[p[k]] - anchors[k]).squaredNorm();
    }
    return total;
  };
  if (k_count <= 8) {
    std::vector<int> best = perm;
    double best_cost = cost(perm);
    std::vector<int> trial = perm;
    std::sort(trial.begin(), trial.end());
    do {
      const double c = cost(trial);
      if (c < best_cost) {
        best_cost = c;
        best = trial;
      }
    } while (std::next_permutation(trial.begin(), trial.end()));
    return best;
  }
  std::vector<bool> used(k_count, false);
  for (int k = 0; k < k_count; ++k) {
    int pick = -1;
    double best_dist = std::numeric_limits<double>::infinity();
    for (int c = 0; c < k_count; ++c) {
      if (used[c]) continue;
      const double dist = (centers[c] - anchors[k]).squaredNorm();
      if (dist < best_dist) {
        best_dist = dist;
        pick = c;
      }
    }
    used[pick] = true;
    perm[k] = pick;
  }
  return perm;
}

}  // namespace

void Sampler::init_state() {
  const int K = prior_.K;
  const int J = data_.n_samples();
  const int d = data_.dim();

  ChainState state;
  state.outlier_mean = prior_.outlier_mean;
  state.outlier_cov = prior_.outlier_cov;

  std::vector<Vector> centers(K);
  std::vector<Matrix> spreads(K);
  if (config_.init == McmcConfig::Init::kmeans) {
    RngStream init_rng(config_.seed, static_cast<std::uint64_t>(J) + 2);
    // Pool the cells (subsampled for speed) and cluster them once; the
    // resulting centers anchor each component consistently across samples.
    const std::int64_t total = data_.total_cells();
    const int max_pool = 20000;
    Matrix pooled;
    if (total <= max_pool) {
      pooled.resize(total, d);
      int row = 0;
      for (const Matrix& sample : data_.samples) {
        pooled.middleRows(row, sample.rows()) = sample;
        row += static_cast<int>(sample.rows());
      }
    } else {
      // Deterministic subsample without replacement (partial Fisher-Yates
      // over global cell indices).
      std::vector<std::int64_t> indices(total);
      std::iota(indices.begin(), indices.end(), 0);
      pooled.resize(max_pool, d);
      for (int i = 0; i < max_pool; ++i) {
        const std::int64_t pick =
            i + static_cast<std::int64_t>(init_rng.uniform_int(total - i));
        std::swap(indices[i], indices[pick]);
        std::int64_t idx = indices[i];
        for (const Matrix& sample : data_.samples) {
          if (idx < sample.rows()) {
            pooled.row(i) = sample.row(idx);
            break;
          }
          idx -= sample.rows();
        }
      }
    }
    const Matrix raw_centers = kmeans_centers(pooled, K, init_rng);
    std::vector<Vector> center_list(K);
    for (int k = 0; k < K; ++k) center_list[k] = raw_centers.row(k).transpose();
    const std::vector<int> perm = match_centers_to_anchors(center_list, prior_.t);

    // Within-cluster covariances from hard assignments to the centers.
    std::vector<int> counts(K, 0);
    std::vector<Vector> sums(K, Vector::Zero(d));
    std::vector<Matrix> sq(K, Matrix::Zero(d, d));
    for (int i = 0; i < pooled.rows(); ++i) {
      const Vector y = pooled.row(i).transpose();
      int best_k = 0;
      double best_dist = std::numeric_limits<double>::infinity();
      for (int k = 0; k < K; ++k) {
        const double dist = (y - center_list[perm[k]]).squaredNorm();
        if (dist < best_dist) {
          best_dist = dist;
          best_k = k;
        }
      }
      counts[best_k] += 1;
      sums[best_k] += y;
      sq[best_k] += y * y.transpose();
    }
    const Matrix pooled_cov = data_.pooled_cov();
    for (int k = 0; k < K; ++k) {
      centers[k] = center_list[perm[k]];
      if (counts[k] > d + 1) {
        const Vector mean = sums[k] / counts[k];
        Matrix cov = (sq[k] - counts[k] * mean * mean.transpose()) /
                     (counts[k] - 1.0);
        cov += (1e-6 * cov.trace() / d + 1e-12) * Matrix::Identity(d, d);
        spreads[k] = cov;
      } else {
        spreads[k] = 0.1 * pooled_cov +
                     1e-9 * Matrix::Identity(d, d);
      }
    }
  } else {
    for (int k = 0; k < K; ++k) {
      centers[k] = prior_.t[k];
      // Wishart prior mean of Psi_k, scaled to the implied component
      // covariance at the smallest nu.
      spreads[k] = prior_.n_psi_for(k) * prior_.H[k].matrix() /
                   std::max(1, prior_.nu_min - d - 1);
    }
  }

  for (int k = 0; k < K; ++k) {
    state.theta.push_back(centers[k]);
    state.sigma_theta.push_back(SpdMatrix::from_matrix(
        prior_.Q[k].matrix() / (prior_.n_theta_for(k) - d - 1)));
    state.nu.push_back(prior_.nu_min);
    state.psi.push_back(SpdMatrix::from_matrix(
        spreads[k] * std::max(1, prior_.nu_min - d - 1)));
  }
  state.mu.resize(J);
  state.sigma.resize(J);
  state.pi.resize(J);
  state.z.resize(J);
  state.x.resize(J);
  for (int j = 0; j < J; ++j) {
    for (int k = 0; k < K; ++k) {
      state.mu[j].push_back(centers[k]);
      state.sigma[j].push_back(SpdMatrix::from_matrix(spreads[k]));
    }
    state.pi[j] = Vector::Constant(K + 1, 1.0 / (K + 1));
    state.z[j].assign(K, 1);
    state.x[j].assign(data_.samples[j].rows(), 0);
  }
  state_ = std::move(state);
  state_.validate(prior_);
}

void Sampler::set_state(ChainState state) {
  state.validate(prior_);
  state_ = std::move(state);
}

void Sampler::per_sample_block(int j) {
  RngStream& rng = sample_rngs_[j];
  stats_[j] = update_assignments(state_, data_, j, rng);
  update_pi(state_, prior_, j, stats_[j], rng);
  if (config_.prior_only) {
    state_.pi[j].setZero();
    state_.pi[j](0) = 1.0;
  }
  update_component_params(state_, j, stats_[j], rng, &sample_counters_[j],
                          mutation_);
  if (config_.rj_enabled) {
    update_activation(state_, prior_, j, stats_[j], rng, &sample_counters_[j]);
  }
}

void Sampler::sweep() {
  const int J = data_.n_samples();
  if (pool_) {
    pool_->parallel_for(J, [this](int j) { per_sample_block(j); });
  } else {
    for (int j = 0; j < J; ++j) per_sample_block(j);
  }
  for (int j = 0; j < J; ++j) {
    counters_.merge(sample_counters_[j]);
    sample_counters_[j] = SamplerCounters{};
  }
  update_latent_layer(state_, prior_, config_.rj_enabled, latent_rng_);
  update_nu(state_, prior_, config_.rj_enabled, config_.nu_proposal_halfwidth,
            latent_rng_, &counters_);
}

Vector Sampler::draw_predictive_cell(int j, RngStream& rng) const {
  const int K = state_.K();
  std::vector<double> log_weights(K + 1);
  for (int k = 0; k <= K; ++k) {
    log_weights[k] = state_.pi[j](k) > 0.0
                         ? std::log(state_.pi[j](k))
                         : -std::numeric_limits<double>::infinity();
  }
  const int k = draw_categorical(log_weights, rng);
  if (k == 0) {
    return draw_mvn(state_.outlier_mean, state_.outlier_cov, rng);
  }
  return draw_mvn(state_.mu[j][k - 1], state_.sigma[j][k - 1], rng);
}

void Sampler::record_draw(Trace* trace) {
  const int K = state_.K();
  const int J = state_.J();
  trace->theta.push_back(state_.theta);
  std::vector<Matrix> st;
  std::vector<Matrix> ps;
  st.reserve(K);
  ps.reserve(K);
  for (int k = 0; k < K; ++k) {
    st.push_back(state_.sigma_theta[k].matrix());
    ps.push_back(state_.psi[k].matrix());
  }
  trace->sigma_theta.push_back(std::move(st));
  trace->psi.push_back(std::move(ps));
  trace->nu.push_back(state_.nu);
  std::vector<std::vector<Vector>> mu(J);
  std::vector<std::vector<Matrix>> sg(J);
  for (int j = 0; j < J; ++j) {
    mu[j] = state_.mu[j];
    sg[j].reserve(K);
    for (int k = 0; k < K; ++k) sg[j].push_back(state_.sigma[j][k].matrix());
  }
  trace->mu.push_back(std::move(mu));
  trace->sigma.push_back(std::move(sg));
  trace->pi.push_back(state_.pi);
  trace->z.push_back(state_.z);
  trace->log_posterior.push_back(log_prior(state_, prior_) +
                                 log_complete_likelihood(state_, data_));
  std::vector<Vector> predictive;
  predictive.reserve(config_.predictive_sample_ids.size() +
                     (config_.predictive_pooled ? 1 : 0));
  for (int id : config_.predictive_sample_ids) {
    predictive.push_back(draw_predictive_cell(id, predictive_rng_));
  }
  if (config_.predictive_pooled) {
    const int j = static_cast<int>(predictive_rng_.uniform_int(J));
    predictive.push_back(draw_predictive_cell(j, predictive_rng_));
  }
  trace->predictive.push_back(std::move(predictive));
}

void Sampler::accumulate_production(Trace* trace) {
  const int K = state_.K();
  const int J = state_.J();
  for (int j = 0; j < J; ++j) {
    for (int k = 0; k < K; ++k) {
      trace->activation_counts[j][k] += state_.z[j][k];
    }
    const int n = static_cast<int>(state_.x[j].size());
    for (int i = 0; i < n; ++i) {
      trace->assignment_counts[j](i, state_.x[j][i]) += 1.0;
    }
    trace->pi_sums[j] += state_.pi[j];
  }
}

Trace Sampler::run() {
  if (state_.theta.empty()) init_state();
  state_.validate(prior_);
  const std::int64_t jitter_start = SpdMatrix::jitter_count();

  const int K = prior_.K;
  const int J = data_.n_samples();
  Trace trace;
  trace.K = K;
  trace.J = J;
  trace.d = data_.dim();
  trace.production = config_.production;
  trace.thin = config_.thin;
  for (int j = 0; j < J; ++j) {
    trace.n_cells.push_back(static_cast<int>(data_.samples[j].rows()));
  }
  trace.activation_counts.assign(J, std::vector<std::int64_t>(K, 0));
  for (int j = 0; j < J; ++j) {
    trace.assignment_counts.emplace_back(
        Matrix::Zero(data_.samples[j].rows(), K + 1));
    trace.pi_sums.emplace_back(Vector::Zero(K + 1));
  }
  for (int id : config_.predictive_sample_ids) {
    trace.predictive_labels.push_back("sample:" + data_.sample_ids[id]);
  }
  if (config_.predictive_pooled) {
    trace.predictive_labels.push_back("pooled");
  }

  auto guarded_sweep = [this](const char* phase, int iteration) {
    try {
      sweep();
    } catch (const NumericalError& error) {
      std::ostringstream msg;
      msg << phase << " sweep " << iteration << ": " << error.what();
      throw NumericalError(msg.str());
    }
  };

  for (int it = 0; it < config_.burn_in; ++it) guarded_sweep("burn-in", it);
  for (int it = 0; it < config_.production; ++it) {
    guarded_sweep("production", it);
    accumulate_production(&trace);
    if ((it + 1) % config_.thin == 0) record_draw(&trace);
  }

  trace.counters = counters_;
  trace.jitter_events = SpdMatrix::jitter_count() - jitter_start;

  // Label-switching diagnostic: flag component pairs whose posterior-mean
  // locations sit closer to each other's prior anchors than to their own.
  if (trace.n_draws() > 0) {
    std::vector<Vector> theta_mean(K, Vector::Zero(trace.d));
    for (const auto& draw : trace.theta) {
      for (int k = 0; k < K; ++k) theta_mean[k] += draw[k];
    }
    for (int k = 0; k < K; ++k) theta_mean[k] /= trace.n_draws();
    for (int k = 0; k < K; ++k) {
      for (int l = k + 1; l < K; ++l) {
        const double straight = (theta_mean[k] - prior_.t[k]).squaredNorm() +
                                (theta_mean[l] - prior_.t[l]).squaredNorm();
        const double swapped = (theta_mean[k] - prior_.t[l]).squaredNorm() +
                               (theta_mean[l] - prior_.t[k]).squaredNorm();
        if (swapped < straight) trace.label_switch_pairs += 1;
      }
    }
  }
  return trace;
}

Trace run_chain(const Dataset& data, const PriorSpec& prior,
                const McmcConfig& config) {
  Sampler sampler(data, prior, config);
  return sampler.run();
}

}  // namespace hiermix
