#include "hydrobalance/initial_law.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace hydrobalance {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

}  // namespace

void InitialLaw::validate() const {
  std::visit(overloaded{
                 [](const Dirac& d) {
                   if (!(d.x0 >= 0.0) || !std::isfinite(d.x0)) throw std::invalid_argument("dirac: x0 must be >= 0");
                 },
                 [](const Uniform& u) {
                   if (!(u.lo >= 0.0) || !(u.hi > u.lo) || !std::isfinite(u.hi))
                     throw std::invalid_argument("uniform: need 0 <= lo < hi");
                 },
                 [](const FromTail& f) {
                   if (!f.tail.value) throw std::invalid_argument("from_tail: empty tail function");
                 },
                 [](const FromSamples& s) {
                   for (double x : s.samples) {
                     if (!(x >= 0.0) || !std::isfinite(x)) throw std::invalid_argument("from_samples: samples must be >= 0");
                   }
                 },
             },
             law);
}

double InitialLaw::tail(double x) const {
  return std::visit(overloaded{
                        [x](const Dirac& d) { return x < d.x0 ? 1.0 : 0.0; },
                        [x](const Uniform& u) {
                          if (x < u.lo) return 1.0;
                          if (x >= u.hi) return 0.0;
                          return (u.hi - x) / (u.hi - u.lo);
                        },
                        [x](const FromTail& f) { return f.tail(x); },
                        [x](const FromSamples& s) {
                          if (s.samples.empty()) return 0.0;
                          const auto above = std::count_if(s.samples.begin(), s.samples.end(), [x](double v) { return v > x; });
                          return static_cast<double>(above) / static_cast<double>(s.samples.size());
                        },
                    },
                    law);
}

double InitialLaw::support_max() const {
  return std::visit(overloaded{
                        [](const Dirac& d) { return d.x0; },
                        [](const Uniform& u) { return u.hi; },
                        [](const FromTail& f) {
                          double hi = std::max(1.0, f.tail.x_max);
                          while (f.tail(hi) > 1e-12 && hi < 1e12) hi *= 2.0;
                          double lo = 0.0;
                          for (int k = 0; k < 200 && hi - lo > 1e-12 * hi; ++k) {
                            const double mid = 0.5 * (lo + hi);
                            (f.tail(mid) > 1e-12 ? lo : hi) = mid;
                          }
                          return hi;
                        },
                        [](const FromSamples& s) {
                          return s.samples.empty() ? 0.0 : *std::max_element(s.samples.begin(), s.samples.end());
                        },
                    },
                    law);
}

double InitialLaw::sample(Rng& rng) const {
  return std::visit(overloaded{
                        [](const Dirac& d) { return d.x0; },
                        [&rng](const Uniform& u) { return u.lo + (u.hi - u.lo) * rng.uniform01(); },
                        [&rng, this](const FromTail& f) {
                          // Generalized inverse: inf{x : tail(x) <= U}.
                          const double u = rng.uniform01();
                          double lo = 0.0;
                          double hi = support_max();
                          if (f.tail(0.0) <= u) return 0.0;
                          for (int k = 0; k < 100; ++k) {
                            const double mid = 0.5 * (lo + hi);
                            (f.tail(mid) <= u ? hi : lo) = mid;
                          }
                          return hi;
                        },
                        [&rng](const FromSamples& s) {
                          if (s.samples.empty()) throw std::invalid_argument("from_samples: no samples");
                          return s.samples[rng.uniform_index(s.samples.size())];
                        },
                    },
                    law);
}

std::vector<double> InitialLaw::draw(std::size_t count, Rng& rng) const {
  if (const auto* s = std::get_if<FromSamples>(&law); s && s->samples.size() == count) return s->samples;
  std::vector<double> out(count);
  for (auto& x : out) x = sample(rng);
  return out;
}

std::string InitialLaw::describe() const {
  std::ostringstream os;
  std::visit(overloaded{
                 [&](const Dirac& d) { os << "dirac(" << d.x0 << ")"; },
                 [&](const Uniform& u) { os << "uniform(" << u.lo << "," << u.hi << ")"; },
                 [&](const FromTail&) { os << "from_tail"; },
                 [&](const FromSamples& s) { os << "from_samples[" << s.samples.size() << "]"; },
             },
             law);
  return os.str();
}

}  // namespace hydrobalance
