#include "hiermix/dip.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "hiermix/errors.hpp"

namespace hiermix {

namespace dip_detail {

Staircase aggregate(const std::vector<double>& xs,
                    const std::vector<double>& ws) {
  if (!ws.empty() && ws.size() != xs.size())
    throw DataError("dip: expected one weight per value, got " +
                    std::to_string(ws.size()) + " weights for " +
                    std::to_string(xs.size()) + " values");
  Staircase s;
  s.x.reserve(xs.size());
  s.before.reserve(xs.size());
  s.after.reserve(xs.size());
  double cum = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (!std::isfinite(xs[i]))
      throw DataError("dip: non-finite value at position " +
                      std::to_string(i));
    const double w = ws.empty() ? 1.0 : ws[i];
    if (!std::isfinite(w) || w <= 0.0)
      throw DataError("dip: weights must be positive and finite");
    if (i > 0 && xs[i] < xs[i - 1])
      throw DataError("dip: values must be sorted ascending");
    s.max_point_mass = std::max(s.max_point_mass, w);
    if (i > 0 && xs[i] == xs[i - 1]) {
      cum += w;
      s.after.back() = cum;
    } else {
      s.x.push_back(xs[i]);
      s.before.push_back(cum);
      cum += w;
      s.after.push_back(cum);
    }
  }
  s.total = cum;
  return s;
}

double minorant_gap(const Staircase& s, std::size_t jb, std::size_t je,
                    std::size_t jj) {
  return (s.after[jj] - s.before[jb]) -
         (s.x[jj] - s.x[jb]) * (s.before[je] - s.before[jb]) /
             (s.x[je] - s.x[jb]);
}

double majorant_gap(const Staircase& s, std::size_t jb, std::size_t je,
                    std::size_t jj) {
  return (s.after[jb] - s.before[jj]) +
         (s.x[jj] - s.x[jb]) * (s.after[je] - s.after[jb]) /
             (s.x[je] - s.x[jb]);
}

bool minorant_keeps(const Staircase& s, std::size_t a, std::size_t b,
                    std::size_t t) {
  return (s.before[b] - s.before[a]) * (s.x[t] - s.x[b]) <
         (s.before[t] - s.before[b]) * (s.x[b] - s.x[a]);
}

bool majorant_keeps(const Staircase& s, std::size_t a, std::size_t b,
                    std::size_t t) {
  return (s.after[b] - s.after[a]) * (s.x[t] - s.x[b]) >
         (s.after[t] - s.after[b]) * (s.x[b] - s.x[a]);
}

std::vector<std::size_t> minorant_chain(const Staircase& s, std::size_t lo,
                                        std::size_t hi) {
  std::vector<std::size_t> chain{lo};
  for (std::size_t t = lo + 1; t <= hi; ++t) {
    while (chain.size() >= 2 &&
           !minorant_keeps(s, chain[chain.size() - 2], chain.back(), t))
      chain.pop_back();
    chain.push_back(t);
  }
  return chain;
}

std::vector<std::size_t> majorant_chain(const Staircase& s, std::size_t lo,
                                        std::size_t hi) {
  std::vector<std::size_t> chain{lo};
  for (std::size_t t = lo + 1; t <= hi; ++t) {
    while (chain.size() >= 2 &&
           !majorant_keeps(s, chain[chain.size() - 2], chain.back(), t))
      chain.pop_back();
    chain.push_back(t);
  }
  return chain;
}

double dip_mass_units(const Staircase& s) {
  const std::size_t n = s.size();
  // A single distinct value: all that remains of the dip is the convention
  // that a sample never scores below half its largest point mass.
  if (n <= 1) return s.max_point_mass;

  double best = 0.0;
  std::size_t lo = 0, hi = n - 1;
  for (std::size_t cycle = 0; cycle <= n; ++cycle) {
    const auto gcm = minorant_chain(s, lo, hi);
    const auto lcm = majorant_chain(s, lo, hi);

    // Largest forced separation between the minorant and the majorant over
    // the current modal window.  Candidates are the jumps at the window ends
    // (where one hull sits at the bottom of the step and the other at its
    // top) and every interior change point of either hull measured against
    // the spanning chord of the opposite hull.  Ties keep the last
    // candidate in ascending-x order.
    double d = s.jump(lo);
    std::size_t new_lo = lo, new_hi = lo;
    std::size_t gx = 1, lx = 1;
    const std::size_t gm = gcm.size() - 1, lm = lcm.size() - 1;
    while (gx < gm || lx < lm) {
      const std::size_t g = gcm[gx], l = lcm[lx];
      double dx;
      std::size_t cand_lo, cand_hi;
      if (g > l) {
        dx = minorant_gap(s, gcm[gx - 1], g, l);
        cand_lo = gcm[gx - 1];
        cand_hi = l;
        ++lx;
      } else {
        dx = majorant_gap(s, lcm[lx - 1], l, g);
        cand_lo = g;
        cand_hi = l;
        ++gx;
      }
      if (dx >= d) {
        d = dx;
        new_lo = cand_lo;
        new_hi = cand_hi;
      }
    }
    if (s.jump(hi) >= d) {
      d = s.jump(hi);
      new_lo = hi;
      new_hi = hi;
    }

    if (d < best) break;

    // The stretches outside the new modal window are settled: record how far
    // the ECDF deviates from the hull fit there.  The inner boundary point
    // itself is skipped because the mode may sit on it, making its jump
    // free.
    double flank = 0.0;
    std::size_t p = 0;
    while (gcm[p] != new_lo) ++p;
    for (; p >= 1; --p) {
      const std::size_t a = gcm[p - 1], b = gcm[p];
      for (std::size_t jj = a; jj <= b; ++jj) {
        if (jj == new_lo) continue;
        flank = std::max(flank, minorant_gap(s, a, b, jj));
      }
    }
    std::size_t q = 0;
    while (lcm[q] != new_hi) ++q;
    for (; q < lm; ++q) {
      const std::size_t a = lcm[q], b = lcm[q + 1];
      for (std::size_t jj = a; jj <= b; ++jj) {
        if (jj == new_hi) continue;
        flank = std::max(flank, majorant_gap(s, a, b, jj));
      }
    }
    best = std::max(best, flank);

    if (new_lo == lo && new_hi == hi) break;
    lo = new_lo;
    hi = new_hi;
  }
  return best;
}

}  // namespace dip_detail

namespace {

double dip_impl(const std::vector<double>& xs, const std::vector<double>& ws) {
  if (xs.size() < 4)
    throw DataError("dip requires at least 4 points, got " +
                    std::to_string(xs.size()));
  const dip_detail::Staircase s = dip_detail::aggregate(xs, ws);
  return dip_detail::dip_mass_units(s) / (2.0 * s.total);
}

}  // namespace

double dip_statistic(const std::vector<double>& xs) { return dip_impl(xs, {}); }

double dip_statistic_weighted(const std::vector<double>& xs,
                              const std::vector<double>& ws) {
  if (ws.empty()) throw DataError("dip: weight vector is empty");
  return dip_impl(xs, ws);
}

double kish_effective_n(const std::vector<double>& ws) {
  if (ws.empty()) throw DataError("kish_effective_n: no weights");
  double sum = 0.0, sum_sq = 0.0;
  for (double w : ws) {
    if (!std::isfinite(w) || w <= 0.0)
      throw DataError("kish_effective_n: weights must be positive and finite");
    sum += w;
    sum_sq += w * w;
  }
  return sum * sum / sum_sq;
}

std::vector<double> dip_null_table(int n, int bootstrap, RngStream& rng) {
  if (n < 4)
    throw DataError("dip null table requires n >= 4, got " +
                    std::to_string(n));
  if (bootstrap < 1)
    throw ConfigError("dip bootstrap count must be positive, got " +
                      std::to_string(bootstrap));
  std::vector<double> table(static_cast<std::size_t>(bootstrap));
  std::vector<double> u(static_cast<std::size_t>(n));
  for (auto& dip : table) {
    for (auto& v : u) v = rng.uniform();
    std::sort(u.begin(), u.end());
    dip = dip_statistic(u);
  }
  std::sort(table.begin(), table.end());
  return table;
}

double dip_p_value(double dip, const std::vector<double>& null_table) {
  if (null_table.empty()) throw ConfigError("dip p-value: empty null table");
  const auto it =
      std::lower_bound(null_table.begin(), null_table.end(), dip);
  return static_cast<double>(null_table.end() - it) /
         static_cast<double>(null_table.size());
}

double dip_test(const std::vector<double>& xs, int bootstrap, RngStream& rng) {
  const double observed = dip_statistic(xs);
  const auto table =
      dip_null_table(static_cast<int>(xs.size()), bootstrap, rng);
  return dip_p_value(observed, table);
}

double dip_test_weighted(const std::vector<double>& xs,
                         const std::vector<double>& ws, int bootstrap,
                         RngStream& rng) {
  const double observed = dip_statistic_weighted(xs, ws);
  const int n_eff =
      std::max(4, static_cast<int>(std::llround(kish_effective_n(ws))));
  const auto table = dip_null_table(n_eff, bootstrap, rng);
  return dip_p_value(observed, table);
}

}  // namespace hiermix
