#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "hydrobalance/initial_law.hpp"
#include "hydrobalance/measure.hpp"
#include "hydrobalance/params.hpp"
#include "hydrobalance/rng.hpp"

namespace hydrobalance {

enum class EventKind { dedicated_arrival, lbs_arrival, departure };

struct Event {
  double time;
  EventKind kind;
  std::size_t queue;  ///< queue that received or served the customer
};

/// Indexed binary min-heap of per-queue departure times; slot i is queue i.
/// Slots with infinite time are idle (no pending departure).
class EventQueue {
 public:
  static constexpr double never = std::numeric_limits<double>::infinity();

  explicit EventQueue(std::size_t n = 0);

  std::size_t size() const { return pos_.size(); }
  double top_time() const { return heap_.empty() ? never : heap_[0].time; }
  std::size_t top_slot() const { return heap_[0].slot; }
  double time_of(std::size_t slot) const { return heap_[pos_[slot]].time; }
  void set(std::size_t slot, double time);

  /// Number of slots holding a finite time.
  std::size_t pending() const;
  bool heap_ordered() const;

 private:
  static constexpr std::size_t kArity = 2;

  struct Node {
    double time;
    std::size_t slot;
  };

  void sift_up(std::size_t pos, Node node);
  void sift_down(std::size_t pos, Node node);
  void place(std::size_t pos, Node node);

  std::vector<Node> heap_;
  std::vector<std::size_t> pos_;  // slot -> heap position
};

struct SystemState {
  double t = 0.0;
  std::vector<std::int64_t> x;
  std::vector<std::int64_t> x_initial;
  std::vector<double> idle_accrued;  ///< idleness up to the last busy/idle switch
  std::vector<double> idle_since;    ///< start of the current idle period (x == 0)
  std::vector<std::int64_t> dedicated_arrivals;
  std::vector<std::int64_t> lbs_arrivals;
  std::vector<std::int64_t> departures;
  std::vector<std::int64_t> rank_histogram;  ///< rank r at index r-1; filled when recording
  std::int64_t events = 0;

  std::size_t n() const { return x.size(); }
  /// Cumulative idleness t - T_i(t).
  double idle_time(std::size_t i) const;
  /// x[i] == x_initial[i] + arrivals - departures for every queue.
  bool ledger_holds() const;
};

struct SnapshotPlan {
  std::vector<double> times;
  bool empirical_measure = true;
  std::vector<std::size_t> tracked;
  bool record_ranks = false;
};

struct Snapshot {
  double t;
  EmpiricalMeasure measure;  ///< empty unless requested
  MeasureStats stats;
};

struct TrackedPoint {
  double x_hat;  ///< x / sqrt(n)
  double l_hat;  ///< mu_n * idle time / sqrt(n)
};

struct SimOutput {
  std::vector<Snapshot> snapshots;
  std::vector<std::vector<TrackedPoint>> tracked;  ///< [tracked index][snapshot]
  std::vector<std::int64_t> rank_histogram;
  std::int64_t events = 0;

  bool operator==(const SimOutput& o) const;
};

/// Exact event-driven simulation of the n-server system.
///
/// The n dedicated Poisson streams are run as their superposition (rate
/// n*lambda_n, target queue uniform), which has the same law. Random streams
/// derived from params.seed: 1 initial lengths, 2 arrival clocks and targets,
/// 3 service times, 4 routing samples.
class Simulator {
 public:
  Simulator(const ModelParams& params, const InitialLaw& initial);

  /// Time and kind of the earliest pending event.
  double next_time() const;
  /// Processes the earliest event and returns it.
  Event step();
  /// Processes every event with time <= t, then sets the clock to t.
  void advance_to(double t);

  const SystemState& state() const { return state_; }
  const EventQueue& queue() const { return queue_; }
  const DerivedConstants& derived() const { return derived_; }

  void record_ranks(bool on);

  std::vector<double> rescaled() const;
  TrackedPoint tracked(std::size_t i) const;

 private:
  void arrive(std::size_t i);

  double next_dedicated_ = EventQueue::never;
  double next_lbs_ = EventQueue::never;
  double dedicated_rate_ = 0.0;
  ModelParams params_;
  DerivedConstants derived_;
  SystemState state_;
  EventQueue queue_;
  Rng init_rng_, arrival_rng_, service_rng_, routing_rng_;
  bool record_ranks_ = false;
  double sqrt_n_;
};

SimOutput run(const ModelParams& params, const InitialLaw& initial, const SnapshotPlan& plan);

struct AveragedSnapshot {
  double t;
  double mean, mean_se;
  double second_moment, second_moment_se;
  double variance, variance_se;
  /// sqrt of the replication-averaged empirical variance.
  double sigma_n;
};

struct ReplicationResult {
  std::vector<SimOutput> runs;  ///< by replication index
  std::vector<AveragedSnapshot> averaged;
};

/// One run per seed (params.seed replaced), up to `jobs` concurrently.
ReplicationResult run_replications(const ModelParams& params, const InitialLaw& initial, const SnapshotPlan& plan,
                                   std::span<const std::uint64_t> seeds, unsigned jobs = 1);

std::vector<AveragedSnapshot> average_snapshots(std::span<const SimOutput> runs);

}  // namespace hydrobalance
