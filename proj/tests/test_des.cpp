#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "hydrobalance/des.hpp"
#include "hydrobalance/routing.hpp"

using namespace hydrobalance;

namespace {

ModelParams small_model(std::int64_t n, std::uint64_t seed) {
  ModelParams p = reference_model(n, seed);
  p.ell = 2;
  return p;
}

// One queue, Poisson(1.2) arrivals in total, service rate 1.5: load 0.8.
ModelParams single_queue(ServiceDist service) {
  ModelParams p;
  p.n = 1;
  p.lambda = p.mu = 1.0;
  p.mu_hat = 0.5;
  p.b = 0.2;
  p.ell = 2;
  p.replacement = Replacement::with;
  p.service = service;
  p.seed = 4;
  return p;
}

}  // namespace

TEST_CASE("event queue agrees with a linear scan") {
  EventQueue q(50);
  std::vector<double> times(50, EventQueue::never);
  Rng rng(1);
  CHECK(q.top_time() == EventQueue::never);
  for (int k = 0; k < 20000; ++k) {
    const std::size_t slot = rng.uniform_index(50);
    const double t = rng.uniform01() < 0.2 ? EventQueue::never : rng.uniform01();
    q.set(slot, t);
    times[slot] = t;
    const auto it = std::min_element(times.begin(), times.end());
    REQUIRE(q.top_time() == *it);
    if (*it != EventQueue::never) CHECK(times[q.top_slot()] == *it);
    CHECK(q.time_of(slot) == t);
  }
  CHECK(q.heap_ordered());
  CHECK(q.pending() == static_cast<std::size_t>(std::count_if(times.begin(), times.end(), [](double t) {
          return t != EventQueue::never;
        })));
}

TEST_CASE("initial laws") {
  CHECK(InitialLaw::dirac(2.0).tail(1.9) == 1.0);
  CHECK(InitialLaw::dirac(2.0).tail(2.0) == 0.0);
  CHECK(InitialLaw::uniform(0, 10).tail(2.5) == doctest::Approx(0.75));
  CHECK(InitialLaw::uniform(0, 10).support_max() == 10.0);
  CHECK_THROWS_AS(InitialLaw::uniform(3, 1).validate(), std::invalid_argument);
  CHECK_THROWS_AS(InitialLaw::dirac(-1).validate(), std::invalid_argument);
  CHECK_THROWS_AS(InitialLaw::from_samples({1.0, -2.0}).validate(), std::invalid_argument);

  TailFunction expo;
  expo.value = [](double x) { return x < 0 ? 1.0 : std::exp(-x); };
  const InitialLaw law = InitialLaw::from_tail(expo);
  CHECK(law.support_max() == doctest::Approx(-std::log(1e-12)).epsilon(1e-6));
  Rng rng(3);
  const auto xs = law.draw(200000, rng);
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  CHECK(std::abs(mean - 1.0) < 4.0 / std::sqrt(200000.0));

  const InitialLaw samples = InitialLaw::from_samples({4, 1, 2});
  CHECK(samples.draw(3, rng) == std::vector<double>{4, 1, 2});
  for (double x : samples.draw(10, rng)) CHECK((x == 1 || x == 2 || x == 4));
}

TEST_CASE("empty initial state has no pending departures") {
  Simulator sim(small_model(50, 1), InitialLaw::dirac(0.0));
  for (auto x : sim.state().x) CHECK(x == 0);
  CHECK(sim.queue().pending() == 0);
}

TEST_CASE("initial lengths are rounded sqrt(n)-scaled draws") {
  Simulator sim(reference_model(10000, 5), InitialLaw::uniform(0.0, 10.0));
  const auto xs = sim.rescaled();
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  CHECK(std::abs(mean - 5.0) < 0.06);
  std::size_t busy = 0;
  for (auto x : sim.state().x) busy += x > 0;
  CHECK(sim.queue().pending() == busy);
}

TEST_CASE("initial samples must match n") {
  CHECK_THROWS_AS(Simulator(small_model(4, 1), InitialLaw::from_samples({1, 2, 3})), std::invalid_argument);
  Simulator sim(small_model(4, 1), InitialLaw::from_samples({1, 0, 0.5, 2}));
  CHECK(sim.state().x == std::vector<std::int64_t>{2, 0, 1, 4});
}

TEST_CASE("counter ledger and calendar stay consistent event by event") {
  Simulator sim(small_model(20, 7), InitialLaw::uniform(0.0, 2.0));
  double last = 0.0;
  for (int k = 0; k < 50000; ++k) {
    const Event ev = sim.step();
    CHECK(ev.time >= last);
    last = ev.time;
    const auto& s = sim.state();
    REQUIRE(s.ledger_holds());
    std::size_t busy = 0;
    for (std::size_t i = 0; i < s.n(); ++i) {
      REQUIRE(s.x[i] >= 0);
      busy += s.x[i] > 0;
      CHECK((s.x[i] > 0) == (sim.queue().time_of(i) != EventQueue::never));
    }
    CHECK(sim.queue().pending() == busy);
  }
  CHECK(sim.queue().heap_ordered());
}

TEST_CASE("arrival counts match the prelimit rates") {
  const ModelParams p = small_model(64, 9);
  Simulator sim(p, InitialLaw::uniform(0.0, 3.0));
  const double horizon = 20.0;
  sim.advance_to(horizon);
  const DerivedConstants d = derive(p);
  double dedicated = 0.0, lbs = 0.0;
  for (std::size_t i = 0; i < sim.state().n(); ++i) {
    dedicated += static_cast<double>(sim.state().dedicated_arrivals[i]);
    lbs += static_cast<double>(sim.state().lbs_arrivals[i]);
  }
  const double mean_ded = d.lambda_n * 64 * horizon;
  const double mean_lbs = d.lambda0_n * horizon;
  CHECK(std::abs(dedicated - mean_ded) < 4.0 * std::sqrt(mean_ded));
  CHECK(std::abs(lbs - mean_lbs) < 4.0 * std::sqrt(mean_lbs));
  CHECK(sim.state().t == horizon);
}

TEST_CASE("single queue matches M/G/1 formulas") {
  // Load 0.8: idle fraction 0.2; mean number in system
  // L = rho + rho^2 (1 + cs^2) / (2 (1 - rho)) = 4 (exponential), 2.4 (deterministic).
  struct Case {
    ServiceDist service;
    double mean_len;
  };
  for (const Case& c : {Case{ServiceDist::exponential(), 4.0}, Case{ServiceDist::deterministic(), 2.4}}) {
    Simulator sim(single_queue(c.service), InitialLaw::dirac(0.0));
    double area = 0.0, prev_t = 0.0;
    const double horizon = 200000.0;
    while (sim.next_time() <= horizon) {
      const double len = static_cast<double>(sim.state().x[0]);
      const double t = sim.step().time;
      area += len * (t - prev_t);
      prev_t = t;
    }
    area += static_cast<double>(sim.state().x[0]) * (horizon - prev_t);
    sim.advance_to(horizon);
    CHECK(sim.state().idle_time(0) / horizon == doctest::Approx(0.2).epsilon(0.03));
    CHECK(area / horizon == doctest::Approx(c.mean_len).epsilon(0.05));
  }
}

TEST_CASE("routed ranks follow the rank law") {
  ModelParams p = small_model(10, 13);
  p.b = 2.0;  // plenty of routed arrivals
  for (auto mode : {Replacement::without, Replacement::with}) {
    p.replacement = mode;
    SnapshotPlan plan;
    plan.times = {200.0};
    plan.record_ranks = true;
    const SimOutput out = run(p, InitialLaw::uniform(0.0, 1.0), plan);
    double total = 0.0;
    for (auto c : out.rank_histogram) total += static_cast<double>(c);
    REQUIRE(total > 10000);
    const RankLaw law = rank_law(10, 2, mode);
    for (std::size_t r = 1; r <= 10; ++r) {
      const double q = law(r);
      const double f = static_cast<double>(out.rank_histogram[r - 1]) / total;
      if (q == 0.0) {
        CHECK(f == 0.0);
      } else {
        CHECK(std::abs(f - q) < 4.0 * std::sqrt(q * (1 - q) / total));
      }
    }
  }
}

TEST_CASE("horizon zero returns the initial measure") {
  const ModelParams p = small_model(30, 2);
  SnapshotPlan plan;
  plan.times = {0.0};
  const SimOutput out = run(p, InitialLaw::uniform(0.0, 4.0), plan);
  REQUIRE(out.snapshots.size() == 1);
  Simulator sim(p, InitialLaw::uniform(0.0, 4.0));
  CHECK(out.snapshots[0].measure == EmpiricalMeasure(sim.rescaled()));
  CHECK(out.events == 0);
}

TEST_CASE("tracked idleness is nondecreasing") {
  ModelParams p = small_model(40, 3);
  SnapshotPlan plan;
  plan.times = {0.0, 0.5, 1.0, 2.0, 4.0};
  plan.tracked = {0, 7};
  const SimOutput out = run(p, InitialLaw::dirac(0.0), plan);
  for (const auto& path : out.tracked) {
    REQUIRE(path.size() == plan.times.size());
    CHECK(path[0].l_hat == 0.0);
    for (std::size_t k = 1; k < path.size(); ++k) CHECK(path[k].l_hat >= path[k - 1].l_hat);
    CHECK(path.back().l_hat > 0.0);
  }
  plan.tracked = {40};
  CHECK_THROWS_AS(run(p, InitialLaw::dirac(0.0), plan), std::out_of_range);
}

TEST_CASE("runs are deterministic in the seed") {
  SnapshotPlan plan;
  plan.times = {0.5, 1.0};
  plan.record_ranks = true;
  const SimOutput a = run(small_model(60, 21), InitialLaw::uniform(0, 5), plan);
  const SimOutput b = run(small_model(60, 21), InitialLaw::uniform(0, 5), plan);
  const SimOutput c = run(small_model(60, 22), InitialLaw::uniform(0, 5), plan);
  CHECK(a == b);
  CHECK_FALSE(a == c);
}

TEST_CASE("replications") {
  SnapshotPlan plan;
  plan.times = {0.0, 0.3};
  const ModelParams p = small_model(100, 0);
  const InitialLaw ic = InitialLaw::uniform(0, 5);

  const std::vector<std::uint64_t> one{17};
  ModelParams p17 = p;
  p17.seed = 17;
  CHECK(run_replications(p, ic, plan, one).runs[0] == run(p17, ic, plan));

  const std::vector<std::uint64_t> same{5, 5};
  const auto dup = run_replications(p, ic, plan, same);
  CHECK(dup.runs[0] == dup.runs[1]);

  std::vector<std::uint64_t> seeds(8);
  for (std::size_t k = 0; k < seeds.size(); ++k) seeds[k] = 100 + k;
  CHECK(run_replications(p, ic, plan, seeds, 1).runs == run_replications(p, ic, plan, seeds, 3).runs);

  CHECK_THROWS_AS(run_replications(p, ic, plan, std::span<const std::uint64_t>{}), std::invalid_argument);
}

TEST_CASE("replication standard error scales like R^-1/2") {
  SnapshotPlan plan;
  plan.times = {0.0};
  const ModelParams p = small_model(100, 0);
  std::vector<double> se;
  for (std::size_t reps : {4u, 16u, 64u}) {
    // Average the SE over disjoint seed blocks to tame its own noise.
    double total = 0.0;
    for (std::uint64_t block = 0; block < 8; ++block) {
      std::vector<std::uint64_t> seeds(reps);
      for (std::size_t k = 0; k < reps; ++k) seeds[k] = 10000 * reps + 1000 * block + k;
      total += run_replications(p, InitialLaw::uniform(0, 5), plan, seeds).averaged[0].mean_se;
    }
    se.push_back(total / 8.0);
  }
  CHECK(se[0] / se[1] == doctest::Approx(2.0).epsilon(0.3));
  CHECK(se[1] / se[2] == doctest::Approx(2.0).epsilon(0.3));
}

TEST_CASE("averaged snapshots") {
  SnapshotPlan plan;
  plan.times = {0.0};
  std::vector<std::uint64_t> seeds{1, 2, 3};
  const auto res = run_replications(small_model(50, 0), InitialLaw::uniform(0, 5), plan, seeds);
  double mean = 0.0, var = 0.0;
  for (const auto& r : res.runs) {
    mean += r.snapshots[0].stats.mean / 3.0;
    var += r.snapshots[0].stats.variance / 3.0;
  }
  CHECK(res.averaged[0].mean == doctest::Approx(mean).epsilon(1e-14));
  CHECK(res.averaged[0].sigma_n == doctest::Approx(std::sqrt(var)).epsilon(1e-14));
}
