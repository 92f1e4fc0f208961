#include "hiermix/summary.hpp"

#include <algorithm>
#include <cstddef>

#include "hiermix/errors.hpp"
#include "hiermix/stats.hpp"

namespace hiermix {

namespace {

struct EntryQuantiles {
  double mean = 0.0, median = 0.0, lower = 0.0, upper = 0.0;
};

EntryQuantiles reduce_entry(std::vector<double>* draws) {
  EntryQuantiles q;
  double acc = 0.0;
  for (double v : *draws) acc += v;
  q.mean = acc / static_cast<double>(draws->size());
  std::sort(draws->begin(), draws->end());
  q.median = quantile_type7(*draws, 0.5);
  q.lower = quantile_type7(*draws, 0.025);
  q.upper = quantile_type7(*draws, 0.975);
  return q;
}

}  // namespace

PosteriorSummary summarize(const Trace& trace) {
  const int n = trace.n_draws();
  if (n == 0) throw DataError("summarize: trace holds no draws");
  const int K = trace.K, J = trace.J, d = trace.d;

  PosteriorSummary s;
  s.K = K;
  s.J = J;
  s.d = d;

  std::vector<double> draws(static_cast<std::size_t>(n));
  for (int k = 0; k < K; ++k) {
    Vector t_mean(d), t_median(d), t_lower(d), t_upper(d);
    for (int i = 0; i < d; ++i) {
      for (int r = 0; r < n; ++r) draws[r] = trace.theta[r][k](i);
      const EntryQuantiles q = reduce_entry(&draws);
      t_mean(i) = q.mean;
      t_median(i) = q.median;
      t_lower(i) = q.lower;
      t_upper(i) = q.upper;
    }
    s.theta_mean.push_back(t_mean);
    s.theta_median.push_back(t_median);
    s.theta_lower.push_back(t_lower);
    s.theta_upper.push_back(t_upper);

    Matrix c_mean(d, d), c_median(d, d), c_lower(d, d), c_upper(d, d);
    Matrix p_mean(d, d);
    for (int i = 0; i < d; ++i) {
      for (int l = i; l < d; ++l) {
        double psi_acc = 0.0;
        for (int r = 0; r < n; ++r) {
          const double psi_il = trace.psi[r][k](i, l);
          psi_acc += psi_il;
          draws[r] = psi_il / (trace.nu[r][k] - d - 1);
        }
        const EntryQuantiles q = reduce_entry(&draws);
        c_mean(i, l) = c_mean(l, i) = q.mean;
        c_median(i, l) = c_median(l, i) = q.median;
        c_lower(i, l) = c_lower(l, i) = q.lower;
        c_upper(i, l) = c_upper(l, i) = q.upper;
        p_mean(i, l) = p_mean(l, i) = psi_acc / n;
      }
    }
    s.latent_cov_mean.push_back(c_mean);
    s.latent_cov_median.push_back(c_median);
    s.latent_cov_lower.push_back(c_lower);
    s.latent_cov_upper.push_back(c_upper);
    s.psi_mean.push_back(p_mean);

    double nu_acc = 0.0;
    for (int r = 0; r < n; ++r) nu_acc += trace.nu[r][k];
    s.nu_mean.push_back(nu_acc / n);
  }

  for (int j = 0; j < J; ++j) {
    std::vector<Vector> mu_mean;
    std::vector<Matrix> sigma_mean;
    for (int k = 0; k < K; ++k) {
      Vector m = Vector::Zero(d);
      Matrix c = Matrix::Zero(d, d);
      for (int r = 0; r < n; ++r) {
        m += trace.mu[r][j][k];
        c += trace.sigma[r][j][k];
      }
      mu_mean.push_back(m / n);
      sigma_mean.push_back(c / n);
    }
    s.mu_mean.push_back(std::move(mu_mean));
    s.sigma_mean.push_back(std::move(sigma_mean));

    // The running accumulators cover every production iteration, not just
    // the thinned draws, so prefer them when present.
    if (trace.production > 0 && !trace.pi_sums.empty()) {
      s.pi_mean.push_back(trace.pi_sums[j] / trace.production);
    } else {
      Vector p = Vector::Zero(K + 1);
      for (int r = 0; r < n; ++r) p += trace.pi[r][j];
      s.pi_mean.push_back(p / n);
    }
    Vector act(K);
    if (trace.production > 0 && !trace.activation_counts.empty()) {
      for (int k = 1; k <= K; ++k) act(k - 1) = trace.activation_probability(j, k);
    } else {
      for (int k = 0; k < K; ++k) {
        double z_acc = 0.0;
        for (int r = 0; r < n; ++r) z_acc += trace.z[r][j][k];
        act(k) = z_acc / n;
      }
    }
    s.activation_probability.push_back(act);
  }
  return s;
}

std::vector<RecoveryRow> recovery_table(const PosteriorSummary& summary,
                                        const GroundTruth& truth) {
  const int K = summary.K, d = summary.d;
  if (static_cast<int>(truth.theta.size()) != K ||
      (K > 0 && truth.theta[0].size() != d))
    throw DataError("recovery_table: summary and truth disagree on K or d");

  std::vector<RecoveryRow> rows;
  for (int k = 1; k <= K; ++k) {
    for (int i = 0; i < d; ++i) {
      RecoveryRow row;
      row.parameter = "theta";
      row.component = k;
      row.row = row.col = i;
      row.truth = truth.theta[k - 1](i);
      row.median = summary.theta_median[k - 1](i);
      row.lower = summary.theta_lower[k - 1](i);
      row.upper = summary.theta_upper[k - 1](i);
      row.covered = row.lower <= row.truth && row.truth <= row.upper;
      rows.push_back(row);
    }
    const Matrix true_cov = truth.latent_cov(k);
    for (int i = 0; i < d; ++i) {
      for (int l = i; l < d; ++l) {
        RecoveryRow row;
        row.parameter = "latent_cov";
        row.component = k;
        row.row = i;
        row.col = l;
        row.truth = true_cov(i, l);
        row.median = summary.latent_cov_median[k - 1](i, l);
        row.lower = summary.latent_cov_lower[k - 1](i, l);
        row.upper = summary.latent_cov_upper[k - 1](i, l);
        row.covered = row.lower <= row.truth && row.truth <= row.upper;
        rows.push_back(row);
      }
    }
  }
  return rows;
}

Matrix population_sizes(const Trace& trace, const MergeResult& merge) {
  const int K = trace.K, J = trace.J;
  if (static_cast<int>(merge.partition.size()) != K)
    throw DataError("population_sizes: partition does not cover the trace");
  const int m_count = static_cast<int>(merge.population_ids.size());

  Matrix sizes = Matrix::Zero(J, m_count);
  for (int j = 0; j < J; ++j) {
    Vector pi_mean;
    if (trace.production > 0 && !trace.pi_sums.empty()) {
      pi_mean = trace.pi_sums[j] / trace.production;
    } else {
      const int n = static_cast<int>(trace.pi.size());
      if (n == 0) throw DataError("population_sizes: trace holds no draws");
      pi_mean = Vector::Zero(K + 1);
      for (int r = 0; r < n; ++r) pi_mean += trace.pi[r][j];
      pi_mean /= n;
    }
    for (int k = 1; k <= K; ++k) {
      const int pop = merge.partition[k - 1];
      const auto it = std::find(merge.population_ids.begin(),
                                merge.population_ids.end(), pop);
      if (it == merge.population_ids.end())
        throw DataError("population_sizes: partition label missing");
      sizes(j, it - merge.population_ids.begin()) += pi_mean(k);
    }
  }
  return sizes;
}

}  // namespace hiermix
