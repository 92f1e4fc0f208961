#pragma once

#include <cstddef>
#include <vector>

#include "hiermix/rng.hpp"

namespace hiermix {

/// Hartigan dip statistic of a sorted sample: the sup-norm distance between
/// the empirical CDF and the closest unimodal CDF, computed by the
/// alternating greatest-convex-minorant / least-concave-majorant algorithm.
/// Requires n >= 4 and ascending order.  By convention the returned value is
/// never below 1/(2n), the value attained by perfectly regular data.
double dip_statistic(const std::vector<double>& xs);

/// Weighted-ECDF generalization: point t carries mass ws[t] > 0.  Unit
/// weights reproduce dip_statistic exactly.
double dip_statistic_weighted(const std::vector<double>& xs,
                              const std::vector<double>& ws);

/// Kish effective sample size (sum w)^2 / sum w^2.
double kish_effective_n(const std::vector<double>& ws);

/// Dip values of `bootstrap` sorted uniform(0,1) samples of size n, returned
/// ascending.  This is the reference null for the dip test.
std::vector<double> dip_null_table(int n, int bootstrap, RngStream& rng);

/// Fraction of null dips >= dip (table must be ascending).
double dip_p_value(double dip, const std::vector<double>& null_table);

/// Bootstrap dip test: p-value = fraction of `bootstrap` uniform samples of
/// size n whose dip reaches the observed one.  Small p rejects unimodality.
double dip_test(const std::vector<double>& xs, int bootstrap, RngStream& rng);

/// Weighted variant; the null sample size is the rounded Kish effective n.
double dip_test_weighted(const std::vector<double>& xs,
                         const std::vector<double>& ws, int bootstrap,
                         RngStream& rng);

namespace dip_detail {

/// Tied values aggregated into a strictly increasing staircase.  before[t]
/// and after[t] are the cumulative masses just below and at x[t]; the ECDF
/// jumps from before[t] to after[t] there.
struct Staircase {
  std::vector<double> x;
  std::vector<double> before;
  std::vector<double> after;
  double total = 0.0;
  /// Largest single (pre-aggregation) point mass; sets the dip floor.
  double max_point_mass = 0.0;

  std::size_t size() const { return x.size(); }
  double jump(std::size_t t) const { return after[t] - before[t]; }
};

Staircase aggregate(const std::vector<double>& xs,
                    const std::vector<double>& ws);

/// Gap at point jj between the ECDF and the chord of the convex minorant
/// (which passes through the `before` values) spanning [jb, je].
double minorant_gap(const Staircase& s, std::size_t jb, std::size_t je,
                    std::size_t jj);

/// Gap at point jj between the chord of the concave majorant (through the
/// `after` values) spanning [jb, je] and the ECDF.
double majorant_gap(const Staircase& s, std::size_t jb, std::size_t je,
                    std::size_t jj);

/// True if vertex b survives as a convex-minorant change point when the
/// hull, currently ending (..., a, b), is extended by point t.
bool minorant_keeps(const Staircase& s, std::size_t a, std::size_t b,
                    std::size_t t);
/// Concave-majorant analog.
bool majorant_keeps(const Staircase& s, std::size_t a, std::size_t b,
                    std::size_t t);

/// Change points (ascending, including both window ends) of the greatest
/// convex minorant of the ECDF on [lo, hi].
std::vector<std::size_t> minorant_chain(const Staircase& s, std::size_t lo,
                                        std::size_t hi);
/// Change points of the least concave majorant on [lo, hi].
std::vector<std::size_t> majorant_chain(const Staircase& s, std::size_t lo,
                                        std::size_t hi);

/// The alternating-algorithm core, in mass units (the dip is the result
/// divided by 2 * total mass).
double dip_mass_units(const Staircase& s);

}  // namespace dip_detail

}  // namespace hiermix
