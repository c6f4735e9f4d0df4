#include "hydrobalance/measure.hpp"

#include <algorithm>
#include <memory>
#include <cmath>
#include <stdexcept>

namespace hydrobalance {

TailFunction TailFunction::piecewise_linear(std::vector<double> xs, std::vector<double> vs) {
  if (xs.size() != vs.size() || xs.empty()) throw std::invalid_argument("piecewise_linear: bad node arrays");
  TailFunction f;
  f.x_max = xs.back();
  f.nodes = xs;
  f.value = [xs = std::move(xs), vs = std::move(vs)](double x) {
    if (x < xs.front()) return 1.0;
    if (x >= xs.back()) return 0.0;
    const auto it = std::upper_bound(xs.begin(), xs.end(), x);
    const auto j = static_cast<std::size_t>(it - xs.begin());
    const double w = (x - xs[j - 1]) / (xs[j] - xs[j - 1]);
    return vs[j - 1] + w * (vs[j] - vs[j - 1]);
  };
  return f;
}

EmpiricalMeasure::EmpiricalMeasure(std::vector<double> samples) : samples_(std::move(samples)) {
  for (double s : samples_) {
    if (!(s >= 0.0) || !std::isfinite(s)) throw std::invalid_argument("EmpiricalMeasure: samples must be finite and >= 0");
  }
  std::sort(samples_.begin(), samples_.end());
}

double EmpiricalMeasure::tail(double x) const {
  if (samples_.empty()) return 0.0;
  const auto above = samples_.end() - std::upper_bound(samples_.begin(), samples_.end(), x);
  return static_cast<double>(above) / static_cast<double>(samples_.size());
}

double EmpiricalMeasure::tail_closed(double x) const {
  if (samples_.empty()) return 0.0;
  const auto above = samples_.end() - std::lower_bound(samples_.begin(), samples_.end(), x);
  return static_cast<double>(above) / static_cast<double>(samples_.size());
}

TailFunction EmpiricalMeasure::as_tail() const {
  TailFunction f;
  auto self = std::make_shared<EmpiricalMeasure>(*this);
  f.value = [self](double x) { return self->tail(x); };
  f.left_limit = [self](double x) { return self->tail_closed(x); };
  f.nodes.assign(samples_.begin(), samples_.end());
  f.nodes.erase(std::unique(f.nodes.begin(), f.nodes.end()), f.nodes.end());
  f.x_max = samples_.empty() ? 0.0 : samples_.back();
  return f;
}

MeasureStats stats(const EmpiricalMeasure& m) {
  if (m.empty()) throw std::invalid_argument("stats: empty measure");
  MeasureStats s;
  s.size = m.size();
  const double inv = 1.0 / static_cast<double>(s.size);
  for (double x : m.samples()) s.mean += x;
  s.mean *= inv;
  double centered = 0.0;
  for (double x : m.samples()) {
    s.second_moment += x * x;
    centered += (x - s.mean) * (x - s.mean);
  }
  s.second_moment *= inv;
  // Two-pass form: equals second_moment - mean^2 up to rounding.
  s.variance = centered * inv;
  return s;
}

double ks_distance(const EmpiricalMeasure& m, const TailFunction& v) {
  double d = 0.0;
  const auto xs = m.samples();
  const std::size_t n = xs.size();
  const double inv = n ? 1.0 / static_cast<double>(n) : 0.0;
  for (std::size_t k = 0; k < n;) {
    std::size_t e = k;
    while (e < n && xs[e] == xs[k]) ++e;
    const double x = xs[k];
    const double open = static_cast<double>(n - e) * inv;
    const double closed = static_cast<double>(n - k) * inv;
    d = std::max({d, std::abs(open - v(x)), std::abs(closed - v.left(x))});
    k = e;
  }
  for (double x : v.nodes) {
    d = std::max({d, std::abs(m.tail(x) - v(x)), std::abs(m.tail_closed(x) - v.left(x))});
  }
  return d;
}

double ks_distance(const EmpiricalMeasure& a, const EmpiricalMeasure& b) {
  const auto xa = a.samples();
  const auto xb = b.samples();
  const double na = static_cast<double>(xa.size());
  const double nb = static_cast<double>(xb.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  // Walk the merged support; after consuming all copies of a value both
  // counters give the closed-CDF, whose complement is the open tail.
  while (i < xa.size() || j < xb.size()) {
    double x;
    if (j == xb.size() || (i < xa.size() && xa[i] <= xb[j])) {
      x = xa[i];
    } else {
      x = xb[j];
    }
    while (i < xa.size() && xa[i] == x) ++i;
    while (j < xb.size() && xb[j] == x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return d;
}

double w1_distance(const EmpiricalMeasure& m, const TailFunction& v) {
  const auto xs = m.samples();
  double x_max = std::max(v.x_max, xs.empty() ? 0.0 : xs.back());
  for (double x : v.nodes) x_max = std::max(x_max, x);
  std::vector<double> grid;
  grid.reserve(xs.size() + v.nodes.size() + 2);
  grid.push_back(0.0);
  for (double x : xs) {
    if (x <= x_max) grid.push_back(x);
  }
  for (double x : v.nodes) {
    if (x >= 0.0 && x <= x_max) grid.push_back(x);
  }
  grid.push_back(x_max);
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());

  double total = 0.0;
  for (std::size_t k = 0; k + 1 < grid.size(); ++k) {
    const double lo = grid[k];
    const double hi = grid[k + 1];
    // Both tails are right-continuous; on [lo, hi) the empirical one is constant.
    const double e = m.tail(lo);
    const double d_lo = e - v(lo);
    const double d_hi = e - v.left(hi);
    if (d_lo * d_hi >= 0.0) {
      total += 0.5 * (std::abs(d_lo) + std::abs(d_hi)) * (hi - lo);
    } else {
      const double frac = d_lo / (d_lo - d_hi);
      total += 0.5 * (std::abs(d_lo) * frac + std::abs(d_hi) * (1.0 - frac)) * (hi - lo);
    }
  }
  return total;
}

EmpiricalMeasure pool(std::span<const EmpiricalMeasure> parts) {
  std::vector<double> all;
  for (const auto& p : parts) all.insert(all.end(), p.samples().begin(), p.samples().end());
  return EmpiricalMeasure(std::move(all));
}

}  // namespace hydrobalance
