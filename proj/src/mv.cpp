#include "hydrobalance/mv.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "hydrobalance/parallel.hpp"

namespace hydrobalance {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

// Empirical open tail at every particle: fraction of particles strictly above.
void self_tail(std::span<const double> x, std::vector<double>& tail, std::vector<std::size_t>& order) {
  const std::size_t n = x.size();
  order.resize(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  tail.resize(n);
  const double inv = 1.0 / static_cast<double>(n);
  std::size_t k = n;
  while (k > 0) {
    std::size_t start = k - 1;
    while (start > 0 && x[order[start - 1]] == x[order[k - 1]]) --start;
    const double above = static_cast<double>(n - k) * inv;
    for (std::size_t q = start; q < k; ++q) tail[order[q]] = above;
    k = start;
  }
}

}  // namespace

double ParticleEnsemble::mean_local_time() const {
  if (local_time.empty()) return 0.0;
  return std::accumulate(local_time.begin(), local_time.end(), 0.0) / static_cast<double>(local_time.size());
}

ParticleEnsemble make_ensemble(std::size_t count, const InitialLaw& initial, const MvCoeffs& coeffs,
                               std::uint64_t seed) {
  if (count == 0) throw std::invalid_argument("make_ensemble: need at least one particle");
  initial.validate();
  ParticleEnsemble ens;
  ens.coeffs = coeffs;
  ens.positions.resize(count);
  ens.local_time.assign(count, 0.0);
  ens.streams.reserve(count);
  const auto* fixed = std::get_if<InitialLaw::FromSamples>(&initial.law);
  const bool use_fixed = fixed && fixed->samples.size() == count;
  for (std::size_t k = 0; k < count; ++k) {
    ens.streams.emplace_back(seed, k);
    ens.positions[k] = use_fixed ? fixed->samples[k] : initial.sample(ens.streams.back());
  }
  return ens;
}

void mv_step(ParticleEnsemble& ens, const DriftSource& drift, double dt, unsigned jobs) {
  if (!(dt > 0.0)) throw std::invalid_argument("mv_step: dt must be positive");
  const std::size_t n = ens.size();
  const MvCoeffs& c = ens.coeffs;
  const double noise = c.sigma * std::sqrt(dt);
  const double t = ens.t;

  std::vector<double> tail;
  std::vector<std::size_t> order;
  if (c.b0 != 0.0 && std::holds_alternative<DriftSource::SelfConsistent>(drift.source)) self_tail(ens.positions, tail, order);

  auto tail_at = [&](std::size_t k, double x) {
    return std::visit(overloaded{
                          [&](const DriftSource::PdeFed& p) { return p.history->value(x, t); },
                          [&](const DriftSource::SelfConsistent&) { return tail[k]; },
                          [&](const DriftSource::Stationary& s) { return s.profile.v(x); },
                      },
                      drift.source);
  };

  constexpr std::size_t block = 4096;
  const std::size_t blocks = (n + block - 1) / block;
  parallel_for(blocks, jobs, [&](std::size_t b) {
    const std::size_t end = std::min(n, (b + 1) * block);
    for (std::size_t k = b * block; k < end; ++k) {
      const double x = ens.positions[k];
      const double v = c.b0 != 0.0 ? tail_at(k, x) : 0.0;
      const double proposal = x + (c.b1 + c.b0 * std::pow(v, c.ell - 1)) * dt + noise * ens.streams[k].normal();
      if (proposal < 0.0) {
        ens.positions[k] = 0.0;
        ens.local_time[k] -= proposal;
      } else {
        ens.positions[k] = proposal;
      }
    }
  });
  ens.t += dt;
}

MvOutput mv_run(std::size_t count, const InitialLaw& initial, const MvCoeffs& coeffs, const DriftSource& drift,
                double dt, std::span<const double> snapshot_times, std::uint64_t seed, unsigned jobs) {
  if (!(dt > 0.0)) throw std::invalid_argument("mv_run: dt must be positive");
  if (!std::is_sorted(snapshot_times.begin(), snapshot_times.end()) ||
      (!snapshot_times.empty() && snapshot_times.front() < 0.0)) {
    throw std::invalid_argument("mv_run: snapshot times must be sorted and nonnegative");
  }
  if (const auto* p = std::get_if<DriftSource::PdeFed>(&drift.source)) {
    if (!p->history || p->history->times.empty()) throw std::invalid_argument("mv_run: empty PDE history");
    const double horizon = snapshot_times.empty() ? 0.0 : snapshot_times.back();
    if (p->history->t_begin() > 0.0 || p->history->t_end() < horizon - 1e-12) {
      throw std::invalid_argument("mv_run: PDE history does not cover the horizon");
    }
  }
  ParticleEnsemble ens = make_ensemble(count, initial, coeffs, seed);
  MvOutput out;
  for (double target : snapshot_times) {
    const double eps = 1e-9 * dt;
    while (ens.t < target - eps) {
      const double h = std::min(dt, target - ens.t);
      const double before = ens.t;
      mv_step(ens, drift, h, jobs);
      if (target - ens.t <= eps) ens.t = target;
      if (ens.t <= before) throw std::runtime_error("mv_run: time did not advance");
    }
    EmpiricalMeasure m(ens.positions);
    out.snapshots.push_back({target, m, stats(m), ens.mean_local_time()});
  }
  return out;
}

ChaosEstimate chaos_diagnostic(std::span<const EmpiricalMeasure> replications, double threshold) {
  const std::size_t r = replications.size();
  if (r < 2) throw std::invalid_argument("chaos_diagnostic: need at least two replications");
  std::vector<double> within(r), frac(r);
  for (std::size_t k = 0; k < r; ++k) {
    const auto n = static_cast<double>(replications[k].size());
    if (n < 2) throw std::invalid_argument("chaos_diagnostic: need at least two particles");
    const double above = replications[k].tail(threshold) * n;
    within[k] = above * (above - 1.0) / (n * (n - 1.0));
    frac[k] = above / n;
  }
  auto estimate = [&](std::size_t skip) {
    double w = 0.0, s = 0.0, s2 = 0.0;
    double count = 0.0;
    for (std::size_t k = 0; k < r; ++k) {
      if (k == skip) continue;
      w += within[k];
      s += frac[k];
      s2 += frac[k] * frac[k];
      count += 1.0;
    }
    // sum over ordered pairs of distinct replications of p_k p_l
    const double cross = (s * s - s2) / (count * (count - 1.0));
    return w / count - cross;
  };
  ChaosEstimate est{estimate(r), 0.0};
  if (r >= 3) {
    std::vector<double> loo(r);
    double mean = 0.0;
    for (std::size_t k = 0; k < r; ++k) mean += (loo[k] = estimate(k));
    mean /= static_cast<double>(r);
    double ss = 0.0;
    for (double v : loo) ss += (v - mean) * (v - mean);
    est.stderr_ = std::sqrt((static_cast<double>(r) - 1.0) / static_cast<double>(r) * ss);
  }
  return est;
}

}  // namespace hydrobalance
