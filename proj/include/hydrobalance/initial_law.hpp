#pragma once

#include <cstddef>
#include <string>
#include <variant>
#include <vector>

#include "hydrobalance/measure.hpp"
#include "hydrobalance/rng.hpp"

namespace hydrobalance {

/// Law of the rescaled initial queue length (or initial particle position).
struct InitialLaw {
  struct Dirac {
    double x0 = 0.0;
  };
  struct Uniform {
    double lo = 0.0;
    double hi = 1.0;
  };
  struct FromTail {
    TailFunction tail;
  };
  struct FromSamples {
    std::vector<double> samples;
  };

  std::variant<Dirac, Uniform, FromTail, FromSamples> law = Dirac{};

  static InitialLaw dirac(double x0) { return {Dirac{x0}}; }
  static InitialLaw uniform(double lo, double hi) { return {Uniform{lo, hi}}; }
  static InitialLaw from_tail(TailFunction v) { return {FromTail{std::move(v)}}; }
  static InitialLaw from_samples(std::vector<double> s) { return {FromSamples{std::move(s)}}; }

  /// Throws std::invalid_argument unless supported on [0, inf).
  void validate() const;

  /// Mass of (x, inf).
  double tail(double x) const;
  /// Smallest x with tail(x) == 0 (for FromTail: where the tail drops below 1e-12).
  double support_max() const;

  /// Draw one value. FromSamples draws uniformly among the stored samples.
  double sample(Rng& rng) const;

  /// `count` values: FromSamples with matching length returns the samples
  /// in order; everything else draws independently.
  std::vector<double> draw(std::size_t count, Rng& rng) const;

  std::string describe() const;
};

}  // namespace hydrobalance
