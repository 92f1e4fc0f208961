#include "hiermix/merge.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "hiermix/dip.hpp"
#include "hiermix/errors.hpp"
#include "hiermix/rng.hpp"

namespace hiermix {

void MergeConfig::validate() const {
  if (!(d1 > 0.0) || !(d1 <= d2))
    throw ConfigError("merge: thresholds must satisfy 0 < d1 <= d2");
  if (!(dip_alpha > 0.0) || !(dip_alpha < 1.0))
    throw ConfigError("merge: dip_alpha must lie in (0, 1)");
  if (dip_bootstrap < 1)
    throw ConfigError("merge: dip_bootstrap must be positive");
  if (!project_axes && !project_fisher)
    throw ConfigError("merge: at least one projection family must be enabled");
}

double bhattacharyya(const GaussianSummary& g1, const GaussianSummary& g2) {
  if (g1.mean.size() != g2.mean.size())
    throw DataError("bhattacharyya: dimension mismatch");
  const SpdMatrix c1 = SpdMatrix::from_matrix(g1.cov);
  const SpdMatrix c2 = SpdMatrix::from_matrix(g2.cov);
  const SpdMatrix avg = SpdMatrix::from_matrix(0.5 * (g1.cov + g2.cov));
  const Vector diff = g1.mean - g2.mean;
  return 0.125 * avg.quad_inv(diff) +
         0.5 * (avg.log_det() - 0.5 * (c1.log_det() + c2.log_det()));
}

std::vector<Matrix> soft_cluster_weights(const Trace& trace,
                                         const Dataset& data) {
  if (trace.assignment_counts.empty() || trace.production <= 0)
    throw DataError("soft_cluster_weights: trace has no assignment counts");
  if (static_cast<int>(trace.assignment_counts.size()) != data.n_samples())
    throw DataError("soft_cluster_weights: trace/dataset sample mismatch");
  std::vector<Matrix> w;
  w.reserve(trace.assignment_counts.size());
  const double total = static_cast<double>(trace.production);
  for (std::size_t j = 0; j < trace.assignment_counts.size(); ++j) {
    if (trace.assignment_counts[j].rows() != data.samples[j].rows())
      throw DataError("soft_cluster_weights: cell count mismatch in sample " +
                      std::to_string(j));
    w.push_back(trace.assignment_counts[j] / total);
  }
  return w;
}

GaussianSummary gaussian_approx(const std::vector<int>& components,
                                const std::vector<Matrix>& w,
                                const Dataset& data) {
  if (w.size() != static_cast<std::size_t>(data.n_samples()))
    throw DataError("gaussian_approx: weight/dataset sample mismatch");
  const int d = data.dim();
  double mass = 0.0;
  std::int64_t cells = 0;
  Vector mean = Vector::Zero(d);
  for (std::size_t j = 0; j < w.size(); ++j) {
    const Matrix& y = data.samples[j];
    cells += y.rows();
    for (Eigen::Index i = 0; i < y.rows(); ++i) {
      double wi = 0.0;
      for (int k : components) wi += w[j](i, k);
      if (wi <= 0.0) continue;
      mass += wi;
      mean += wi * y.row(i).transpose();
    }
  }
  if (mass <= 0.0)
    throw DataError("gaussian_approx: cluster set has zero soft mass");
  mean /= mass;
  Matrix cov = Matrix::Zero(d, d);
  for (std::size_t j = 0; j < w.size(); ++j) {
    const Matrix& y = data.samples[j];
    for (Eigen::Index i = 0; i < y.rows(); ++i) {
      double wi = 0.0;
      for (int k : components) wi += w[j](i, k);
      if (wi <= 0.0) continue;
      const Vector centered = y.row(i).transpose() - mean;
      cov += wi * centered * centered.transpose();
    }
  }
  cov /= mass;
  return {std::move(mean), std::move(cov),
          mass / static_cast<double>(cells)};
}

Vector fisher_coordinate(const GaussianSummary& g1,
                         const GaussianSummary& g2) {
  const Vector diff = g1.mean - g2.mean;
  if (diff.norm() == 0.0)
    throw DataError("fisher_coordinate: cluster means coincide");
  const SpdMatrix pooled = SpdMatrix::from_matrix(g1.cov + g2.cov);
  Vector dir = pooled.solve(diff);
  return dir / dir.norm();
}

namespace {

struct Population {
  int id = 0;                // smallest member component
  std::vector<int> members;  // ascending component ids
  GaussianSummary summary;
};

/// Projected cell values and weights for the union of two populations,
/// sorted by value.  Cells with zero pooled weight are dropped; in hard mode
/// a cell counts with weight 1 iff its modal column lies in the union.
void gather_projection(const std::vector<int>& members,
                       const std::vector<Matrix>& w, const Dataset& data,
                       const Vector& direction, bool hard,
                       std::vector<double>* xs, std::vector<double>* ws) {
  std::vector<std::pair<double, double>> vw;
  for (std::size_t j = 0; j < w.size(); ++j) {
    const Matrix& y = data.samples[j];
    for (Eigen::Index i = 0; i < y.rows(); ++i) {
      double wi = 0.0;
      if (hard) {
        Eigen::Index mode = 0;
        w[j].row(i).maxCoeff(&mode);
        if (std::find(members.begin(), members.end(),
                      static_cast<int>(mode)) != members.end())
          wi = 1.0;
      } else {
        for (int k : members) wi += w[j](i, k);
      }
      if (wi <= 0.0) continue;
      vw.emplace_back(y.row(i).dot(direction), wi);
    }
  }
  std::sort(vw.begin(), vw.end());
  xs->clear();
  ws->clear();
  xs->reserve(vw.size());
  ws->reserve(vw.size());
  for (const auto& [v, wi] : vw) {
    xs->push_back(v);
    ws->push_back(wi);
  }
}

}  // namespace

MergeResult merge_clusters(const std::vector<GaussianSummary>& summaries,
                           const std::vector<Matrix>& w, const Dataset& data,
                           const MergeConfig& config) {
  config.validate();
  const int K = static_cast<int>(summaries.size());
  if (K == 0) throw ConfigError("merge_clusters: no clusters given");
  if (w.size() != static_cast<std::size_t>(data.n_samples()))
    throw DataError("merge_clusters: weight/dataset sample mismatch");
  for (std::size_t j = 0; j < w.size(); ++j) {
    if (w[j].rows() != data.samples[j].rows() || w[j].cols() != K + 1)
      throw DataError("merge_clusters: weight matrix shape mismatch");
  }
  const int d = data.dim();

  std::vector<Population> pops;
  pops.reserve(K);
  for (int k = 1; k <= K; ++k)
    pops.push_back({k, {k}, summaries[k - 1]});

  // Bootstrap null tables keyed by sample size on a dedicated stream per
  // size, so a projection's p-value depends only on its cells and the seed.
  std::map<int, std::vector<double>> tables;
  const auto null_table = [&](int n) -> const std::vector<double>& {
    auto it = tables.find(n);
    if (it == tables.end()) {
      RngStream rng(config.seed, (std::uint64_t{1} << 32) + n);
      it = tables.emplace(n, dip_null_table(n, config.dip_bootstrap, rng))
               .first;
    }
    return it->second;
  };

  std::set<std::pair<int, int>> vetoed;
  MergeResult result;
  std::vector<double> xs, ws;

  while (pops.size() > 1) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t bi = 0, bj = 0;
    for (std::size_t i = 0; i < pops.size(); ++i) {
      if (pops[i].summary.weight <= 0.0) continue;
      for (std::size_t j = i + 1; j < pops.size(); ++j) {
        if (pops[j].summary.weight <= 0.0) continue;
        if (vetoed.count({pops[i].id, pops[j].id})) continue;
        const double dist = bhattacharyya(pops[i].summary, pops[j].summary);
        if (dist < best) {
          best = dist;
          bi = i;
          bj = j;
        }
      }
    }
    if (!std::isfinite(best) || best >= config.d2) break;

    MergeStep step;
    step.into = pops[bi].id;
    step.from = pops[bj].id;
    step.distance = best;
    step.criterion = "distance";

    if (best >= config.d1) {
      std::vector<int> joint = pops[bi].members;
      joint.insert(joint.end(), pops[bj].members.begin(),
                   pops[bj].members.end());
      std::sort(joint.begin(), joint.end());

      std::vector<Vector> directions;
      if (config.project_axes)
        for (int m = 0; m < d; ++m) directions.push_back(Vector::Unit(d, m));
      if (config.project_fisher &&
          (pops[bi].summary.mean - pops[bj].summary.mean).norm() > 0.0)
        directions.push_back(
            fisher_coordinate(pops[bi].summary, pops[bj].summary));

      bool unimodal = true;
      step.criterion = "unimodal";
      for (const Vector& dir : directions) {
        gather_projection(joint, w, data, dir, config.hard_assignments, &xs,
                          &ws);
        double p = 1.0;  // too few cells: no evidence against unimodality
        if (xs.size() >= 4) {
          const double observed = dip_statistic_weighted(xs, ws);
          const int n_eff = std::max(
              4, static_cast<int>(std::llround(kish_effective_n(ws))));
          p = dip_p_value(observed, null_table(n_eff));
        }
        step.dip_p_values.push_back(p);
        if (p < config.dip_alpha) unimodal = false;
      }
      if (!unimodal) {
        vetoed.insert({pops[bi].id, pops[bj].id});
        continue;
      }
    }

    // Merge bj into bi: recompute the union summary from the cells.
    pops[bi].members.insert(pops[bi].members.end(), pops[bj].members.begin(),
                            pops[bj].members.end());
    std::sort(pops[bi].members.begin(), pops[bi].members.end());
    pops[bi].summary = gaussian_approx(pops[bi].members, w, data);
    pops.erase(pops.begin() + static_cast<std::ptrdiff_t>(bj));
    for (auto it = vetoed.begin(); it != vetoed.end();) {
      if (it->first == step.into || it->second == step.into ||
          it->first == step.from || it->second == step.from)
        it = vetoed.erase(it);
      else
        ++it;
    }
    result.merge_log.push_back(std::move(step));
  }

  result.partition.assign(K, 0);
  for (const Population& pop : pops) {
    result.population_ids.push_back(pop.id);
    for (int k : pop.members) result.partition[k - 1] = pop.id;
  }
  const int G = static_cast<int>(pops.size());
  result.soft_weights.reserve(w.size());
  for (std::size_t j = 0; j < w.size(); ++j) {
    Matrix merged = Matrix::Zero(w[j].rows(), G + 1);
    merged.col(0) = w[j].col(0);
    for (int g = 0; g < G; ++g)
      for (int k : pops[g].members) merged.col(g + 1) += w[j].col(k);
    result.soft_weights.push_back(std::move(merged));
  }
  return result;
}

std::vector<Matrix> population_quantiles(const std::vector<Matrix>& w,
                                         const Dataset& data,
                                         const std::vector<double>& levels) {
  if (w.size() != static_cast<std::size_t>(data.n_samples()))
    throw DataError("population_quantiles: weight/dataset sample mismatch");
  for (double a : levels)
    if (!(a >= 0.0) || !(a < 1.0))
      throw ConfigError("population_quantiles: levels must lie in [0, 1)");
  const int d = data.dim();
  const int G = w.empty() ? 0 : static_cast<int>(w[0].cols());
  std::vector<Matrix> out;
  out.reserve(G);
  std::vector<std::pair<double, double>> vw;
  for (int g = 0; g < G; ++g) {
    Matrix table(levels.size(), d);
    for (int m = 0; m < d; ++m) {
      vw.clear();
      double total = 0.0;
      for (std::size_t j = 0; j < w.size(); ++j) {
        const Matrix& y = data.samples[j];
        for (Eigen::Index i = 0; i < y.rows(); ++i) {
          const double wi = w[j](i, g);
          if (wi <= 0.0) continue;
          vw.emplace_back(y(i, m), wi);
          total += wi;
        }
      }
      if (vw.empty())
        throw DataError("population_quantiles: population " +
                        std::to_string(g) + " is empty");
      std::sort(vw.begin(), vw.end());
      for (std::size_t l = 0; l < levels.size(); ++l) {
        const double target = levels[l] * total;
        double cum = 0.0;
        double q = vw.back().first;
        for (std::size_t t = 0; t < vw.size(); ++t) {
          cum += vw[t].second;
          // include the full mass of ties at this value before comparing
          if (t + 1 < vw.size() && vw[t + 1].first == vw[t].first) continue;
          if (cum > target) {
            q = vw[t].first;
            break;
          }
        }
        table(static_cast<Eigen::Index>(l), m) = q;
      }
    }
    out.push_back(std::move(table));
  }
  return out;
}

}  // namespace hiermix
