#pragma once

#include <cstdint>
#include <random>
#include <span>

namespace betamix {

/// Seeded random source. Every draw is a fixed function of the 64-bit seed,
/// independent of the standard library's distribution implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform();

  /// Uniform on the open interval (0, 1).
  double uniform_open();

  /// Standard normal (Marsaglia polar method).
  double normal();

  /// Index drawn with probability proportional to weights[i].
  std::size_t categorical(std::span<const double> weights);

  /// Uniform integer in [0, n).
  std::size_t index(std::size_t n);

  /// Child stream seeded from this one; advances this stream by one draw.
  Rng split();

 private:
  std::mt19937_64 engine_;
};

/// SplitMix64 finalizer, used to derive independent seeds.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace betamix
