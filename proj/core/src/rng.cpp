#include "hiermix/rng.hpp"

#include <cmath>

#include "hiermix/errors.hpp"

namespace hiermix {

namespace {

inline std::uint64_t rotl(std::uint64_t x, int k) {
  return (x << k) | (x >> (64 - k));
}

// SplitMix64 step; used only to expand the (seed, stream_id) pair into the
// 256-bit xoshiro state.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream_id) {
  // Mix the stream id into the seed through one SplitMix64 round so that
  // (seed, 0), (seed, 1), ... start from well-separated points, then expand.
  std::uint64_t mixer = seed;
  std::uint64_t mixed = splitmix64(mixer) ^ (stream_id * 0xda942042e4dd58b5ULL);
  std::uint64_t expander = mixed;
  for (auto& word : state_) {
    word = splitmix64(expander);
  }
  // All-zero state is the one invalid xoshiro state; SplitMix64 output of four
  // consecutive words is never all zero in practice, but guard anyway.
  if (state_[0] == 0 && state_[1] == 0 && state_[2] == 0 && state_[3] == 0) {
    state_[0] = 1;
  }
}

std::uint64_t RngStream::next_u64() {
  // xoshiro256++
  const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
  const std::uint64_t t = state_[1] << 17;
  state_[2] ^= state_[0];
  state_[3] ^= state_[1];
  state_[1] ^= state_[2];
  state_[0] ^= state_[3];
  state_[2] ^= t;
  state_[3] = rotl(state_[3], 45);
  return result;
}

double RngStream::uniform() {
  // 53-bit mantissa, centered so the result lies strictly inside (0, 1).
  return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
}

double RngStream::normal() {
  if (has_spare_normal_) {
    has_spare_normal_ = false;
    return spare_normal_;
  }
  double u, v, s;
  do {
    u = 2.0 * uniform() - 1.0;
    v = 2.0 * uniform() - 1.0;
    s = u * u + v * v;
  } while (s >= 1.0 || s == 0.0);
  const double scale = std::sqrt(-2.0 * std::log(s) / s);
  spare_normal_ = v * scale;
  has_spare_normal_ = true;
  return u * scale;
}

double RngStream::gamma(double shape) {
  if (!(shape > 0.0)) {
    throw NumericalError("RngStream::gamma: shape must be positive");
  }
  if (shape < 1.0) {
    // Gamma(a) = Gamma(a + 1) * U^{1/a}; computed in log space to avoid
    // underflow for tiny shapes.
    const double g = gamma(shape + 1.0);
    const double u = uniform();
    return g * std::exp(std::log(u) / shape);
  }
  // Marsaglia-Tsang.
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x, v;
    do {
      x = normal();
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = uniform();
    const double x2 = x * x;
    if (u < 1.0 - 0.0331 * x2 * x2) {
      return d * v;
    }
    if (std::log(u) < 0.5 * x2 + d * (1.0 - v + std::log(v))) {
      return d * v;
    }
  }
}

double RngStream::exponential(double rate) {
  if (!(rate > 0.0)) {
    throw NumericalError("RngStream::exponential: rate must be positive");
  }
  return -std::log(uniform()) / rate;
}

double RngStream::beta(double a, double b) {
  const double x = gamma(a);
  const double y = gamma(b);
  return x / (x + y);
}

std::uint64_t RngStream::uniform_int(std::uint64_t bound) {
  if (bound == 0) {
    throw NumericalError("RngStream::uniform_int: bound must be >= 1");
  }
  // Rejection below the largest multiple of bound, so every residue is
  // equally likely.  threshold == 2^64 mod bound.
  const std::uint64_t threshold = (0 - bound) % bound;
  for (;;) {
    const std::uint64_t r = next_u64();
    if (r >= threshold) {
      return r % bound;
    }
  }
}

}  // namespace hiermix
