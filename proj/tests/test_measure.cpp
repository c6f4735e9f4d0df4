#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "hydrobalance/measure.hpp"
#include "hydrobalance/rng.hpp"

using namespace hydrobalance;

namespace {

TailFunction exp_tail(double rate) {
  TailFunction v;
  v.value = [rate](double x) { return x < 0.0 ? 1.0 : std::exp(-rate * x); };
  return v;
}

TailFunction dirac_tail(double c) {
  TailFunction v;
  v.value = [c](double x) { return x < c ? 1.0 : 0.0; };
  v.left_limit = [c](double x) { return x <= c ? 1.0 : 0.0; };
  v.nodes = {c};
  return v;
}

EmpiricalMeasure exp_samples(std::size_t n, double rate, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> xs(n);
  for (auto& x : xs) x = rng.exponential(rate);
  return EmpiricalMeasure(std::move(xs));
}

// Brute force: sup over a fine grid plus one-sided limits at every sample.
double ks_brute(const EmpiricalMeasure& m, const TailFunction& v, double hi) {
  const auto s = m.samples();
  const double n = static_cast<double>(s.size());
  auto open = [&](double x) {
    return static_cast<double>(s.end() - std::upper_bound(s.begin(), s.end(), x)) / n;
  };
  double d = 0.0;
  for (int k = 0; k <= 200000; ++k) {
    const double x = hi * k / 200000.0;
    d = std::max(d, std::abs(open(x) - v(x)));
  }
  for (double x : s) {
    d = std::max(d, std::abs(open(x) - v(x)));
    d = std::max(d, std::abs(open(std::nextafter(x, -1.0)) - v(std::nextafter(x, -1.0))));
  }
  return d;
}

double w1_brute(const EmpiricalMeasure& m, const TailFunction& v, double hi, int cells) {
  const double h = hi / cells;
  double total = 0.0;
  for (int k = 0; k < cells; ++k) {
    const double x = (k + 0.5) * h;
    total += std::abs(m.tail(x) - v(x)) * h;
  }
  return total;
}

}  // namespace

TEST_CASE("open and closed tails") {
  const EmpiricalMeasure m({3.0, 1.0, 2.0});
  CHECK(m.tail(2.0) == doctest::Approx(1.0 / 3.0));
  CHECK(m.tail_closed(2.0) == doctest::Approx(2.0 / 3.0));
  CHECK(m.tail(0.5) == 1.0);
  CHECK(m.tail(3.0) == 0.0);
  CHECK(m.tail(10.0) == 0.0);
  CHECK(std::is_sorted(m.samples().begin(), m.samples().end()));
  const TailFunction t = m.as_tail();
  CHECK(t(2.0) == doctest::Approx(1.0 / 3.0));
  CHECK(t.left(2.0) == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("invalid samples are rejected") {
  CHECK_THROWS_AS(EmpiricalMeasure({1.0, -0.5}), std::invalid_argument);
  CHECK_THROWS_AS(EmpiricalMeasure({NAN}), std::invalid_argument);
  CHECK_THROWS_AS(stats(EmpiricalMeasure{}), std::invalid_argument);
}

TEST_CASE("empirical moments") {
  const MeasureStats z = stats(EmpiricalMeasure({0, 0, 0}));
  CHECK(z.mean == 0.0);
  CHECK(z.variance == 0.0);
  const MeasureStats s = stats(EmpiricalMeasure({1, 3}));
  CHECK(s.mean == 2.0);
  CHECK(s.variance == 1.0);
  CHECK(s.second_moment == 5.0);
  CHECK(s.size == 2);
  CHECK(stats(EmpiricalMeasure({7.25})).variance == 0.0);
  // Large offset: two-pass variance keeps full precision.
  CHECK(stats(EmpiricalMeasure({1e8 + 1, 1e8 + 3})).variance == 1.0);
}

TEST_CASE("ks against a matching tail is zero") {
  const EmpiricalMeasure m({0.5, 1.0, 1.0, 4.0});
  CHECK(ks_distance(m, m.as_tail()) == 0.0);
  CHECK(ks_distance(EmpiricalMeasure({0.0}), dirac_tail(0.0)) == 0.0);
  CHECK(ks_distance(EmpiricalMeasure({2.0}), dirac_tail(2.0)) == 0.0);
}

TEST_CASE("ks sees both sides of an atom") {
  // Tail of U[0,1] vs a single atom at 0.5: gap 1/2 on both sides of the jump.
  TailFunction uni;
  uni.value = [](double x) { return x < 0 ? 1.0 : (x > 1 ? 0.0 : 1.0 - x); };
  uni.nodes = {0.0, 1.0};
  CHECK(ks_distance(EmpiricalMeasure({0.5}), uni) == doctest::Approx(0.5));
  CHECK(ks_distance(EmpiricalMeasure({0.9}), uni) == doctest::Approx(0.9));
}

TEST_CASE("ks matches a brute-force sup") {
  for (std::size_t n : {5u, 50u, 500u}) {
    const EmpiricalMeasure m = exp_samples(n, 0.7, n);
    const double fast = ks_distance(m, exp_tail(0.7));
    const double slow = ks_brute(m, exp_tail(0.7), 40.0);
    CHECK(fast >= slow - 1e-12);
    CHECK(fast - slow < 1e-4);
  }
}

TEST_CASE("ks shrinks as the sample grows") {
  double previous = 1.0;
  for (std::size_t n : {100u, 10000u, 1000000u}) {
    double avg = 0.0;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) avg += ks_distance(exp_samples(n, 1.0, 1000 * n + seed), exp_tail(1.0));
    avg /= 5.0;
    CHECK(avg < previous);
    CHECK(avg < 2.0 / std::sqrt(static_cast<double>(n)));
    previous = avg;
  }
}

TEST_CASE("two-sample ks") {
  const EmpiricalMeasure a({1, 2, 3}), b({1, 2, 3});
  CHECK(ks_distance(a, b) == 0.0);
  CHECK(ks_distance(EmpiricalMeasure({0.0}), EmpiricalMeasure({1.0})) == 1.0);
  CHECK(ks_distance(EmpiricalMeasure({0, 2}), EmpiricalMeasure({1, 2})) == doctest::Approx(0.5));
  const EmpiricalMeasure x = exp_samples(300, 1.0, 4), y = exp_samples(200, 1.0, 5);
  CHECK(ks_distance(x, y) == doctest::Approx(ks_distance(x, y.as_tail())));
  CHECK(ks_distance(x, y) == ks_distance(y, x));
}

TEST_CASE("w1 distances") {
  const EmpiricalMeasure m({0.5, 1.0, 1.0, 4.0});
  CHECK(w1_distance(m, m.as_tail()) == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(w1_distance(EmpiricalMeasure({0.0}), dirac_tail(2.5)) == doctest::Approx(2.5));

  Rng rng(77);
  std::vector<double> xs(100000);
  for (auto& x : xs) x = rng.uniform01();
  TailFunction uni = TailFunction::piecewise_linear({0.0, 1.0}, {1.0, 0.0});
  CHECK(w1_distance(EmpiricalMeasure(xs), uni) < 0.005);

  std::vector<double> nodes, values;
  for (int k = 0; k <= 6000; ++k) {
    nodes.push_back(0.01 * k);
    values.push_back(std::exp(-0.5 * nodes.back()));
  }
  const TailFunction lin = TailFunction::piecewise_linear(nodes, values);
  const EmpiricalMeasure e = exp_samples(400, 0.5, 8);
  CHECK(w1_distance(e, lin) == doctest::Approx(w1_brute(e, lin, 60.0, 600000)).epsilon(1e-6));
}

TEST_CASE("w1 splits sign changes exactly") {
  // |1{x<1} - (1 - x/2)| on [0, 2]: two triangles of area 1/4 each.
  const TailFunction line = TailFunction::piecewise_linear({0.0, 2.0}, {1.0, 0.0});
  CHECK(w1_distance(EmpiricalMeasure({1.0}), line) == doctest::Approx(0.5).epsilon(1e-14));
}

TEST_CASE("piecewise linear tails") {
  const TailFunction t = TailFunction::piecewise_linear({0.0, 1.0, 3.0}, {1.0, 0.5, 0.1});
  CHECK(t(0.5) == doctest::Approx(0.75));
  CHECK(t(2.0) == doctest::Approx(0.3));
  CHECK(t(3.5) == 0.0);
  CHECK(t(-1.0) == 1.0);
  CHECK(t.x_max == 3.0);
}

TEST_CASE("pooling") {
  const std::vector<EmpiricalMeasure> parts{EmpiricalMeasure({3, 1}), EmpiricalMeasure({2}), EmpiricalMeasure({0, 5})};
  const EmpiricalMeasure p = pool(parts);
  CHECK(p.size() == 5);
  CHECK(std::vector<double>(p.samples().begin(), p.samples().end()) == std::vector<double>{0, 1, 2, 3, 5});
}

TEST_CASE("S polynomial identities") {
  for (int ell : {2, 3, 4}) {
    for (double z : {0.0, 0.5, 1.0}) {
      CHECK(s_poly(z, z, ell) == doctest::Approx(ell * std::pow(z, ell - 1)));
    }
  }
  CHECK(s_poly(1.0, 0.0, 3) == 1.0);
  CHECK(s_poly(2.0, 1.0, 2) == 3.0);
  // (a^ell - b^ell) = (a - b) S(a, b)
  for (double a : {0.3, 0.9}) {
    for (double b : {0.1, 0.7}) {
      CHECK(s_poly(a, b, 5) * (a - b) == doctest::Approx(std::pow(a, 5) - std::pow(b, 5)));
    }
  }
}
