#include "hydrobalance/des.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <tuple>
#include <utility>

#include "hydrobalance/parallel.hpp"
#include "hydrobalance/routing.hpp"

namespace hydrobalance {

// ---- EventQueue ------------------------------------------------------------

EventQueue::EventQueue(std::size_t n) : heap_(n), pos_(n) {
  for (std::size_t k = 0; k < n; ++k) {
    heap_[k] = {never, k};
    pos_[k] = k;
  }
}

void EventQueue::set(std::size_t slot, double time) {
  const std::size_t pos = pos_[slot];
  const double old = heap_[pos].time;
  if (time < old) {
    sift_up(pos, {time, slot});
  } else if (time > old) {
    sift_down(pos, {time, slot});
  }
}

std::size_t EventQueue::pending() const {
  return static_cast<std::size_t>(
      std::count_if(heap_.begin(), heap_.end(), [](const Node& node) { return node.time != never; }));
}

bool EventQueue::heap_ordered() const {
  for (std::size_t k = 1; k < heap_.size(); ++k) {
    if (heap_[(k - 1) / kArity].time > heap_[k].time || pos_[heap_[k].slot] != k) return false;
  }
  return true;
}

void EventQueue::place(std::size_t pos, Node node) {
  heap_[pos] = node;
  pos_[node.slot] = pos;
}

void EventQueue::sift_up(std::size_t pos, Node node) {
  while (pos > 0) {
    const std::size_t parent = (pos - 1) / kArity;
    if (heap_[parent].time <= node.time) break;
    place(pos, heap_[parent]);
    pos = parent;
  }
  place(pos, node);
}

void EventQueue::sift_down(std::size_t pos, Node node) {
  const std::size_t size = heap_.size();
  while (true) {
    const std::size_t first = kArity * pos + 1;
    if (first >= size) break;
    const std::size_t last = std::min(first + kArity, size);
    std::size_t child = first;
    for (std::size_t c = first + 1; c < last; ++c) {
      if (heap_[c].time < heap_[child].time) child = c;
    }
    if (node.time <= heap_[child].time) break;
    place(pos, heap_[child]);
    pos = child;
  }
  place(pos, node);
}

// ---- SystemState -----------------------------------------------------------

double SystemState::idle_time(std::size_t i) const {
  return idle_accrued[i] + (x[i] == 0 ? t - idle_since[i] : 0.0);
}

bool SystemState::ledger_holds() const {
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] != x_initial[i] + dedicated_arrivals[i] + lbs_arrivals[i] - departures[i]) return false;
  }
  return true;
}

// ---- Simulator -------------------------------------------------------------

Simulator::Simulator(const ModelParams& params, const InitialLaw& initial)
    : params_(params),
      derived_(derive(params)),
      queue_(static_cast<std::size_t>(params.n)),
      init_rng_(params.seed, 1),
      arrival_rng_(params.seed, 2),
      service_rng_(params.seed, 3),
      routing_rng_(params.seed, 4),
      sqrt_n_(std::sqrt(static_cast<double>(params.n))) {
  initial.validate();
  const auto n = static_cast<std::size_t>(params.n);
  if (const auto* s = std::get_if<InitialLaw::FromSamples>(&initial.law); s && s->samples.size() != n) {
    throw std::invalid_argument("initial samples must have length n = " + std::to_string(n));
  }
  const std::vector<double> draws = initial.draw(n, init_rng_);
  state_.x.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    state_.x[i] = std::max<std::int64_t>(0, std::llround(sqrt_n_ * draws[i]));
  }
  state_.x_initial = state_.x;
  state_.idle_accrued.assign(n, 0.0);
  state_.idle_since.assign(n, 0.0);
  state_.dedicated_arrivals.assign(n, 0);
  state_.lbs_arrivals.assign(n, 0);
  state_.departures.assign(n, 0);
  state_.rank_histogram.assign(n, 0);

  dedicated_rate_ = static_cast<double>(n) * derived_.lambda_n;
  if (dedicated_rate_ > 0.0) next_dedicated_ = arrival_rng_.exponential(dedicated_rate_);
  if (derived_.lambda0_n > 0.0) next_lbs_ = arrival_rng_.exponential(derived_.lambda0_n);
  for (std::size_t i = 0; i < n; ++i) {
    if (state_.x[i] > 0) queue_.set(i, service_sample(params_.service, service_rng_) / derived_.mu_n);
  }
}

void Simulator::record_ranks(bool on) { record_ranks_ = on; }

void Simulator::arrive(std::size_t i) {
  if (state_.x[i] == 0) {
    state_.idle_accrued[i] += state_.t - state_.idle_since[i];
    queue_.set(i, state_.t + service_sample(params_.service, service_rng_) / derived_.mu_n);
  }
  ++state_.x[i];
}

double Simulator::next_time() const { return std::min({next_dedicated_, next_lbs_, queue_.top_time()}); }

Event Simulator::step() {
  const double t_dep = queue_.top_time();
  Event ev{};
  if (next_dedicated_ <= next_lbs_ && next_dedicated_ <= t_dep) {
    ev = {next_dedicated_, EventKind::dedicated_arrival, 0};
  } else if (next_lbs_ <= t_dep) {
    ev = {next_lbs_, EventKind::lbs_arrival, 0};
  } else {
    ev = {t_dep, EventKind::departure, t_dep == EventQueue::never ? 0 : queue_.top_slot()};
  }
  if (ev.time == EventQueue::never) throw std::logic_error("Simulator::step: no pending events");
  state_.t = ev.time;
  ++state_.events;
  switch (ev.kind) {
    case EventKind::dedicated_arrival: {
      next_dedicated_ = state_.t + arrival_rng_.exponential(dedicated_rate_);
      ev.queue = arrival_rng_.uniform_index(state_.x.size());
      ++state_.dedicated_arrivals[ev.queue];
      arrive(ev.queue);
      break;
    }
    case EventKind::lbs_arrival: {
      next_lbs_ = state_.t + arrival_rng_.exponential(derived_.lambda0_n);
      const std::span<const std::int64_t> xs(state_.x);
      const std::size_t j = select_direct(xs, params_.ell, params_.replacement, routing_rng_);
      if (record_ranks_) ++state_.rank_histogram[rank(j, xs) - 1];
      ++state_.lbs_arrivals[j];
      arrive(j);
      ev.queue = j;
      break;
    }
    case EventKind::departure: {
      const std::size_t i = ev.queue;
      if (state_.x[i] <= 0) {
        throw std::logic_error("departure from empty queue " + std::to_string(i) + " at t=" + std::to_string(state_.t));
      }
      --state_.x[i];
      ++state_.departures[i];
      if (state_.x[i] > 0) {
        queue_.set(i, state_.t + service_sample(params_.service, service_rng_) / derived_.mu_n);
      } else {
        queue_.set(i, EventQueue::never);
        state_.idle_since[i] = state_.t;
      }
      break;
    }
  }
  return ev;
}

void Simulator::advance_to(double t) {
  if (t < state_.t) throw std::invalid_argument("advance_to: time runs backwards");
  while (next_time() <= t) step();
  state_.t = t;
}

std::vector<double> Simulator::rescaled() const {
  std::vector<double> out(state_.x.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = static_cast<double>(state_.x[i]) / sqrt_n_;
  return out;
}

TrackedPoint Simulator::tracked(std::size_t i) const {
  return {static_cast<double>(state_.x.at(i)) / sqrt_n_, derived_.mu_n * state_.idle_time(i) / sqrt_n_};
}

bool SimOutput::operator==(const SimOutput& o) const {
  if (snapshots.size() != o.snapshots.size()) return false;
  for (std::size_t k = 0; k < snapshots.size(); ++k) {
    const auto& a = snapshots[k];
    const auto& b = o.snapshots[k];
    if (a.t != b.t || !(a.measure == b.measure) || a.stats.mean != b.stats.mean ||
        a.stats.variance != b.stats.variance || a.stats.second_moment != b.stats.second_moment) {
      return false;
    }
  }
  if (tracked.size() != o.tracked.size()) return false;
  for (std::size_t k = 0; k < tracked.size(); ++k) {
    if (tracked[k].size() != o.tracked[k].size()) return false;
    for (std::size_t s = 0; s < tracked[k].size(); ++s) {
      if (tracked[k][s].x_hat != o.tracked[k][s].x_hat || tracked[k][s].l_hat != o.tracked[k][s].l_hat) return false;
    }
  }
  return rank_histogram == o.rank_histogram && events == o.events;
}

SimOutput run(const ModelParams& params, const InitialLaw& initial, const SnapshotPlan& plan) {
  if (!std::is_sorted(plan.times.begin(), plan.times.end()) ||
      (!plan.times.empty() && plan.times.front() < 0.0)) {
    throw std::invalid_argument("snapshot times must be sorted and nonnegative");
  }
  Simulator sim(params, initial);
  sim.record_ranks(plan.record_ranks);
  for (std::size_t i : plan.tracked) {
    if (i >= static_cast<std::size_t>(params.n)) throw std::out_of_range("tracked queue index out of range");
  }
  SimOutput out;
  out.tracked.resize(plan.tracked.size());
  for (double t : plan.times) {
    sim.advance_to(t);
    EmpiricalMeasure m(sim.rescaled());
    Snapshot snap{t, {}, stats(m)};
    if (plan.empirical_measure) snap.measure = std::move(m);
    out.snapshots.push_back(std::move(snap));
    for (std::size_t k = 0; k < plan.tracked.size(); ++k) out.tracked[k].push_back(sim.tracked(plan.tracked[k]));
  }
  if (plan.record_ranks) out.rank_histogram = sim.state().rank_histogram;
  out.events = sim.state().events;
  return out;
}

std::vector<AveragedSnapshot> average_snapshots(std::span<const SimOutput> runs) {
  std::vector<AveragedSnapshot> avg;
  if (runs.empty()) return avg;
  const std::size_t snaps = runs[0].snapshots.size();
  const double r = static_cast<double>(runs.size());
  auto mean_se = [&](auto get, std::size_t k) {
    double m = 0.0;
    for (const auto& run : runs) m += get(run.snapshots[k].stats);
    m /= r;
    double ss = 0.0;
    for (const auto& run : runs) {
      const double d = get(run.snapshots[k].stats) - m;
      ss += d * d;
    }
    const double se = runs.size() > 1 ? std::sqrt(ss / (r - 1.0) / r) : 0.0;
    return std::pair{m, se};
  };
  for (std::size_t k = 0; k < snaps; ++k) {
    AveragedSnapshot a{};
    a.t = runs[0].snapshots[k].t;
    std::tie(a.mean, a.mean_se) = mean_se([](const MeasureStats& s) { return s.mean; }, k);
    std::tie(a.second_moment, a.second_moment_se) = mean_se([](const MeasureStats& s) { return s.second_moment; }, k);
    std::tie(a.variance, a.variance_se) = mean_se([](const MeasureStats& s) { return s.variance; }, k);
    a.sigma_n = std::sqrt(a.variance);
    avg.push_back(a);
  }
  return avg;
}

ReplicationResult run_replications(const ModelParams& params, const InitialLaw& initial, const SnapshotPlan& plan,
                                   std::span<const std::uint64_t> seeds, unsigned jobs) {
  if (seeds.empty()) throw std::invalid_argument("run_replications: need at least one seed");
  ReplicationResult result;
  result.runs.resize(seeds.size());
  parallel_for(seeds.size(), jobs, [&](std::size_t k) {
    ModelParams p = params;
    p.seed = seeds[k];
    result.runs[k] = run(p, initial, plan);
  });
  result.averaged = average_snapshots(result.runs);
  return result;
}

}  // namespace hydrobalance
