#pragma once

#include <array>
#include <cstdint>

namespace hiermix {

/// Deterministic random stream: xoshiro256++ seeded through SplitMix64 from a
/// (seed, stream_id) pair.  Distinct stream ids give independent streams, so
/// each sample in a dataset can own its stream and results are bit-identical
/// regardless of how streams are scheduled across worker threads.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream_id);

  /// Next raw 64-bit word.
  std::uint64_t next_u64();

  /// Uniform on the open interval (0, 1); never returns 0 or 1.
  double uniform();

  /// Standard normal via the Marsaglia polar method (with one cached spare).
  double normal();

  /// Gamma(shape, 1) via Marsaglia-Tsang squeeze; shape < 1 handled by the
  /// boost transform Gamma(shape+1) * U^{1/shape}.
  double gamma(double shape);

  double chi_squared(double dof) { return 2.0 * gamma(0.5 * dof); }

  double exponential(double rate);

  double beta(double a, double b);

  /// Uniform integer in [0, bound), bound >= 1, by rejection (unbiased).
  std::uint64_t uniform_int(std::uint64_t bound);

 private:
  std::array<std::uint64_t, 4> state_;
  double spare_normal_ = 0.0;
  bool has_spare_normal_ = false;
};

}  // namespace hiermix
