#include <boost/math/distributions/beta.hpp>
#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/exponential.hpp>
#include <boost/math/distributions/gamma.hpp>
#include <boost/math/distributions/normal.hpp>
#include <cmath>
#include <vector>

#include "doctest.h"
#include "hiermix/rng.hpp"
#include "test_util.hpp"

using namespace hiermix;
using hiermix::testutil::ks_critical;
using hiermix::testutil::ks_statistic;

namespace {

constexpr int kDraws = 10000;
constexpr double kAlpha = 0.001;

template <typename Fn>
std::vector<double> collect(RngStream& rng, int n, Fn fn) {
  std::vector<double> out;
  out.reserve(n);
  for (int i = 0; i < n; ++i) out.push_back(fn(rng));
  return out;
}

}  // namespace

TEST_SUITE("rng") {

TEST_CASE("identical seed and stream reproduce the sequence") {
  RngStream a(42, 3);
  RngStream b(42, 3);
  for (int i = 0; i < 100; ++i) {
    CHECK(a.next_u64() == b.next_u64());
  }
  RngStream c(42, 4);
  RngStream d(43, 3);
  bool c_differs = false;
  bool d_differs = false;
  RngStream reference(42, 3);
  for (int i = 0; i < 10; ++i) {
    const std::uint64_t word = reference.next_u64();
    c_differs = c_differs || (c.next_u64() != word);
    d_differs = d_differs || (d.next_u64() != word);
  }
  CHECK(c_differs);
  CHECK(d_differs);
}

TEST_CASE("uniform stays strictly inside (0,1) and passes KS") {
  RngStream rng(1, 0);
  auto samples = collect(rng, kDraws, [](RngStream& r) { return r.uniform(); });
  for (double u : samples) {
    CHECK(u > 0.0);
    CHECK(u < 1.0);
  }
  const double d_stat = ks_statistic(samples, [](double x) { return x; });
  CHECK(d_stat < ks_critical(kDraws, kAlpha));
}

TEST_CASE("normal passes KS against the standard normal CDF") {
  RngStream rng(2, 0);
  auto samples = collect(rng, kDraws, [](RngStream& r) { return r.normal(); });
  boost::math::normal_distribution<double> ref(0.0, 1.0);
  const double d_stat =
      ks_statistic(samples, [&](double x) { return cdf(ref, x); });
  CHECK(d_stat < ks_critical(kDraws, kAlpha));
}

TEST_CASE("gamma passes KS for shapes below and above one") {
  for (double shape : {0.3, 1.0, 2.5, 17.0}) {
    RngStream rng(3, static_cast<std::uint64_t>(shape * 100));
    auto samples =
        collect(rng, kDraws, [&](RngStream& r) { return r.gamma(shape); });
    boost::math::gamma_distribution<double> ref(shape, 1.0);
    const double d_stat =
        ks_statistic(samples, [&](double x) { return cdf(ref, x); });
    CAPTURE(shape);
    CHECK(d_stat < ks_critical(kDraws, kAlpha));
  }
}

TEST_CASE("chi-squared, exponential and beta pass KS") {
  RngStream rng(4, 0);
  auto chi = collect(rng, kDraws, [](RngStream& r) { return r.chi_squared(5.0); });
  boost::math::chi_squared_distribution<double> chi_ref(5.0);
  CHECK(ks_statistic(chi, [&](double x) { return cdf(chi_ref, x); }) <
        ks_critical(kDraws, kAlpha));

  auto expo =
      collect(rng, kDraws, [](RngStream& r) { return r.exponential(2.5); });
  boost::math::exponential_distribution<double> exp_ref(2.5);
  CHECK(ks_statistic(expo, [&](double x) { return cdf(exp_ref, x); }) <
        ks_critical(kDraws, kAlpha));

  auto beta = collect(rng, kDraws, [](RngStream& r) { return r.beta(2.0, 5.0); });
  boost::math::beta_distribution<double> beta_ref(2.0, 5.0);
  CHECK(ks_statistic(beta, [&](double x) { return cdf(beta_ref, x); }) <
        ks_critical(kDraws, kAlpha));
}

TEST_CASE("uniform_int is unbiased over its range") {
  RngStream rng(5, 0);
  const std::uint64_t bound = 7;
  std::vector<int> counts(bound, 0);
  const int n = 70000;
  for (int i = 0; i < n; ++i) {
    const std::uint64_t v = rng.uniform_int(bound);
    REQUIRE(v < bound);
    counts[v] += 1;
  }
  // Chi-square with 6 dof; 32.9 is the 0.999 quantile.
  double chi2 = 0.0;
  const double expected = static_cast<double>(n) / bound;
  for (int c : counts) {
    chi2 += (c - expected) * (c - expected) / expected;
  }
  CHECK(chi2 < 32.9);
}

}  // TEST_SUITE
