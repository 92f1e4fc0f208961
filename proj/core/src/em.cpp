#include "hiermix/em.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "hiermix/density.hpp"
#include "hiermix/errors.hpp"

namespace hiermix {

namespace {

// Squared distance from every row to its nearest center among the first
// `n_centers` rows of `centers`.
void nearest_sq_dist(const Matrix& points, const Matrix& centers,
                     int n_centers, std::vector<double>* dist) {
  const int n = static_cast<int>(points.rows());
  for (int i = 0; i < n; ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (int c = 0; c < n_centers; ++c) {
      const double d2 = (points.row(i) - centers.row(c)).squaredNorm();
      if (d2 < best) best = d2;
    }
    (*dist)[i] = best;
  }
}

}  // namespace

Matrix kmeans_centers(const Matrix& points, int k, RngStream& rng,
                      int max_iters) {
  const int n = static_cast<int>(points.rows());
  const int d = static_cast<int>(points.cols());
  if (k < 1) throw ConfigError("kmeans_centers: k must be >= 1");
  if (n < k) throw DataError("kmeans_centers: fewer points than clusters");

  // k-means++ seeding.
  Matrix centers(k, d);
  centers.row(0) = points.row(static_cast<int>(rng.uniform_int(n)));
  std::vector<double> dist(n);
  for (int c = 1; c < k; ++c) {
    nearest_sq_dist(points, centers, c, &dist);
    double total = 0.0;
    for (double d2 : dist) total += d2;
    if (total <= 0.0) {
      // All remaining points coincide with chosen centers.
      centers.row(c) = points.row(static_cast<int>(rng.uniform_int(n)));
      continue;
    }
    double target = rng.uniform() * total;
    int pick = n - 1;
    for (int i = 0; i < n; ++i) {
      target -= dist[i];
      if (target <= 0.0) {
        pick = i;
        break;
      }
    }
    centers.row(c) = points.row(pick);
  }

  // Lloyd iterations.
  std::vector<int> assign(n, -1);
  for (int iter = 0; iter < max_iters; ++iter) {
    bool changed = false;
    for (int i = 0; i < n; ++i) {
      int best_c = 0;
      double best = std::numeric_limits<double>::infinity();
      for (int c = 0; c < k; ++c) {
        const double d2 = (points.row(i) - centers.row(c)).squaredNorm();
        if (d2 < best) {
          best = d2;
          best_c = c;
        }
      }
      if (assign[i] != best_c) {
        assign[i] = best_c;
        changed = true;
      }
    }
    if (!changed) break;
    Matrix sums = Matrix::Zero(k, d);
    std::vector<int> counts(k, 0);
    for (int i = 0; i < n; ++i) {
      sums.row(assign[i]) += points.row(i);
      counts[assign[i]] += 1;
    }
    for (int c = 0; c < k; ++c) {
      if (counts[c] > 0) {
        centers.row(c) = sums.row(c) / counts[c];
      } else {
        // Reseed an empty cluster at the point farthest from its center.
        nearest_sq_dist(points, centers, k, &dist);
        const int far = static_cast<int>(
            std::max_element(dist.begin(), dist.end()) - dist.begin());
        centers.row(c) = points.row(far);
      }
    }
  }
  return centers;
}

namespace {

struct EmCandidate {
  std::vector<double> weights;
  std::vector<Vector> means;
  std::vector<Matrix> covs;
  double log_likelihood = -std::numeric_limits<double>::infinity();
  int iterations = 0;
  bool valid = false;
};

// One EM run from a k-means++ start; returns an invalid candidate if a
// component degenerates beyond repair.
EmCandidate run_em_once(const Matrix& sample, int k, RngStream& rng,
                        double tol, int max_iters) {
  const int n = static_cast<int>(sample.rows());
  const int d = static_cast<int>(sample.cols());
  EmCandidate fit;
  fit.weights.assign(k, 1.0 / k);
  fit.means.resize(k);
  fit.covs.assign(k, Matrix::Zero(d, d));

  const Matrix centers = kmeans_centers(sample, k, rng);
  for (int c = 0; c < k; ++c) fit.means[c] = centers.row(c).transpose();
  // Start every covariance at the pooled covariance (plus a floor).
  const Vector grand_mean = sample.colwise().mean().transpose();
  Matrix centered = sample.rowwise() - grand_mean.transpose();
  Matrix pooled = centered.transpose() * centered / std::max(1, n - 1);
  pooled += (1e-9 * pooled.trace() / d + 1e-12) * Matrix::Identity(d, d);
  for (int c = 0; c < k; ++c) fit.covs[c] = pooled;

  Matrix log_resp(n, k);
  double prev_ll = -std::numeric_limits<double>::infinity();
  for (int iter = 0; iter < max_iters; ++iter) {
    // E step in the log domain.
    std::vector<SpdMatrix> cov_spd;
    cov_spd.reserve(k);
    try {
      for (int c = 0; c < k; ++c) {
        cov_spd.push_back(SpdMatrix::from_matrix(fit.covs[c]));
      }
    } catch (const NumericalError&) {
      return fit;  // invalid
    }
    double ll = 0.0;
    Vector y(d);
    for (int i = 0; i < n; ++i) {
      y = sample.row(i).transpose();
      double max_term = -std::numeric_limits<double>::infinity();
      for (int c = 0; c < k; ++c) {
        log_resp(i, c) = std::log(fit.weights[c]) +
                         log_gaussian(y, fit.means[c], cov_spd[c]);
        max_term = std::max(max_term, log_resp(i, c));
      }
      double total = 0.0;
      for (int c = 0; c < k; ++c) total += std::exp(log_resp(i, c) - max_term);
      const double lse = max_term + std::log(total);
      ll += lse;
      for (int c = 0; c < k; ++c) log_resp(i, c) -= lse;
    }
    fit.log_likelihood = ll;
    fit.iterations = iter + 1;
    if (ll - prev_ll < tol && iter > 0) break;
    prev_ll = ll;

    // M step.
    for (int c = 0; c < k; ++c) {
      double resp_sum = 0.0;
      Vector mean = Vector::Zero(d);
      for (int i = 0; i < n; ++i) {
        const double r = std::exp(log_resp(i, c));
        resp_sum += r;
        mean += r * sample.row(i).transpose();
      }
      if (resp_sum < 1e-10) {
        return fit;  // component starved: degenerate run
      }
      mean /= resp_sum;
      Matrix cov = Matrix::Zero(d, d);
      for (int i = 0; i < n; ++i) {
        const double r = std::exp(log_resp(i, c));
        const Vector diff = sample.row(i).transpose() - mean;
        cov += r * diff * diff.transpose();
      }
      cov /= resp_sum;
      cov += (1e-10 * cov.trace() / d + 1e-12) * Matrix::Identity(d, d);
      fit.weights[c] = resp_sum / n;
      fit.means[c] = mean;
      fit.covs[c] = cov;
    }
  }
  fit.valid = std::isfinite(fit.log_likelihood);
  return fit;
}

}  // namespace

EmFit em_baseline(const Matrix& sample, int k, RngStream& rng, int restarts,
                  double tol, int max_iters) {
  const int n = static_cast<int>(sample.rows());
  const int d = static_cast<int>(sample.cols());
  if (n <= k * d) {
    throw DataError("em_baseline: need more rows than k * d");
  }
  EmCandidate best;
  int used = 0;
  for (int r = 0; r < restarts; ++r) {
    EmCandidate candidate = run_em_once(sample, k, rng, tol, max_iters);
    ++used;
    if (candidate.valid && candidate.log_likelihood > best.log_likelihood) {
      best = std::move(candidate);
      best.valid = true;
    }
  }
  if (!best.valid) {
    throw NumericalError("em_baseline: every restart degenerated");
  }
  EmFit fit;
  fit.weights = best.weights;
  fit.means = best.means;
  fit.covs = best.covs;
  fit.log_likelihood = best.log_likelihood;
  fit.iterations = best.iterations;
  fit.restarts_used = used;
  // Hard assignments from the final parameters.
  fit.hard_assignments.resize(n);
  std::vector<SpdMatrix> cov_spd;
  cov_spd.reserve(k);
  for (int c = 0; c < k; ++c) cov_spd.push_back(SpdMatrix::from_matrix(fit.covs[c]));
  Vector y(d);
  for (int i = 0; i < n; ++i) {
    y = sample.row(i).transpose();
    int best_c = 0;
    double best_score = -std::numeric_limits<double>::infinity();
    for (int c = 0; c < k; ++c) {
      const double score =
          std::log(fit.weights[c]) + log_gaussian(y, fit.means[c], cov_spd[c]);
      if (score > best_score) {
        best_score = score;
        best_c = c;
      }
    }
    fit.hard_assignments[i] = best_c;
  }
  return fit;
}

}  // namespace hiermix
