#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace hydrobalance {

/// A nonincreasing tail function x -> mass of (x, inf), with its left limits.
///
/// `nodes` lists points where the function has kinks or jumps (grid nodes for
/// a piecewise linear tail, atoms for a step tail); distance computations
/// evaluate there in addition to the empirical sample points.
struct TailFunction {
  std::function<double(double)> value;
  std::function<double(double)> left_limit;  ///< empty: the function is continuous
  std::vector<double> nodes;
  double x_max = 0.0;  ///< domain right end; 0 means "use the samples"

  double operator()(double x) const { return value(x); }
  double left(double x) const { return left_limit ? left_limit(x) : value(x); }

  /// Piecewise-linear interpolant through (xs[j], vs[j]); 0 beyond xs.back().
  static TailFunction piecewise_linear(std::vector<double> xs, std::vector<double> vs);
};

struct MeasureStats {
  double mean = 0.0;
  double second_moment = 0.0;
  double variance = 0.0;  ///< raw (not Bessel-corrected) empirical variance
  std::size_t size = 0;
};

/// Sorted multiset of nonnegative reals.
class EmpiricalMeasure {
 public:
  EmpiricalMeasure() = default;
  /// Sorts; throws std::invalid_argument on negative or non-finite samples.
  explicit EmpiricalMeasure(std::vector<double> samples);

  std::span<const double> samples() const { return samples_; }
  std::size_t size() const { return samples_.size(); }
  bool empty() const { return samples_.empty(); }

  /// Fraction of samples strictly above x.
  double tail(double x) const;
  /// Fraction of samples at or above x.
  double tail_closed(double x) const;

  /// Open tail as a step TailFunction (left limits are the closed tail).
  TailFunction as_tail() const;

  bool operator==(const EmpiricalMeasure&) const = default;

 private:
  std::vector<double> samples_;
};

/// Throws std::invalid_argument on an empty measure.
MeasureStats stats(const EmpiricalMeasure& m);

/// sup_x |m(x, inf) - v(x)|, evaluated at sample points (both one-sided
/// limits) and at v's nodes.
double ks_distance(const EmpiricalMeasure& m, const TailFunction& v);

/// Two-sample sup distance between open tails.
double ks_distance(const EmpiricalMeasure& a, const EmpiricalMeasure& b);

/// Integral over [0, x_max] of |m(x, inf) - v(x)|, trapezoid on the merged
/// breakpoint grid with sign changes split exactly (exact when v is linear
/// between its nodes). x_max is the largest of v.x_max, v's nodes and the
/// samples.
double w1_distance(const EmpiricalMeasure& m, const TailFunction& v);

/// Pool several measures into one (equal weight per sample).
EmpiricalMeasure pool(std::span<const EmpiricalMeasure> parts);

/// S(a, b) = a^{ell-1} + a^{ell-2} b + ... + b^{ell-1}, evaluated by Horner in a.
template <typename Scalar>
Scalar s_poly(Scalar a, Scalar b, int ell) {
  Scalar s(1);
  Scalar b_pow(1);
  for (int k = 1; k < ell; ++k) {
    b_pow *= b;
    s = s * a + b_pow;
  }
  return s;
}

}  // namespace hydrobalance
