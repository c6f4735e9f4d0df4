#pragma once

#include <cstdint>

namespace hydrobalance {

/// Reproducible random stream.
///
/// Engine: xoshiro256** (Blackman & Vigna). The 256-bit state is filled by
/// four successive SplitMix64 outputs started from
/// `mix64(seed) ^ mix64(stream + 0x9E3779B97F4A7C15)`, so every
/// (seed, stream) pair names an independent, platform-stable sequence.
///
/// Variates are produced by code in this file only (no <random>
/// distributions, whose algorithms are implementation-defined):
///   - uniform01: top 53 bits scaled to [0, 1)
///   - exponential: -log(U) with U in (0, 1]
///   - normal: Marsaglia polar method, spare value cached
///   - uniform_index: Lemire's unbiased multiply-shift rejection
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0, std::uint64_t stream = 0);

  std::uint64_t next();

  double uniform01();
  /// Uniform on (0, 1].
  double uniform_open();
  double exponential(double rate);
  double normal();
  /// Uniform integer in [0, bound).
  std::uint64_t uniform_index(std::uint64_t bound);

  /// Child stream keyed by `stream`; does not advance this stream.
  Rng split(std::uint64_t stream) const;

  std::uint64_t seed() const { return seed_; }

 private:
  std::uint64_t s_[4];
  std::uint64_t seed_;
  std::uint64_t stream_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

std::uint64_t mix64(std::uint64_t z);

}  // namespace hydrobalance
