#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <memory>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "hydrobalance/config.hpp"
#include "hydrobalance/csv.hpp"
#include "hydrobalance/des.hpp"
#include "hydrobalance/harness.hpp"
#include "hydrobalance/mv.hpp"
#include "hydrobalance/pde.hpp"
#include "hydrobalance/routing.hpp"

namespace fs = std::filesystem;
using namespace hydrobalance;

namespace {

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out = ".";
  std::optional<unsigned> jobs;
};

void add_common(CLI::App* app, Common& c) {
  app->add_option("--config", c.config, "JSON configuration (a manifest.json works too)");
  app->add_option("--seed", c.seed, "Base seed; overrides the config");
  app->add_option("--out", c.out, "Output directory")->capture_default_str();
  app->add_option("--jobs", c.jobs, "Worker threads; overrides the config")->check(CLI::PositiveNumber);
}

Config resolve(const Common& c) {
  Config cfg = c.config.empty() ? Config{} : load_config(c.config);
  if (c.seed) {
    cfg.model.seed = *c.seed;
    cfg.experiment.seed_base = *c.seed;
    cfg.sim.seeds.clear();
  }
  if (c.jobs) cfg.jobs = *c.jobs;
  cfg.model.validate();
  cfg.initial.validate();
  fs::create_directories(c.out);
  return cfg;
}

std::string time_tag(double t) { return fmt12(t); }

void write_snapshot(const fs::path& path, std::span<const EmpiricalMeasure* const> parts) {
  CsvWriter csv(path, {"replication", "x"});
  for (std::size_t r = 0; r < parts.size(); ++r) {
    for (double x : parts[r]->samples()) {
      csv.cell(static_cast<long long>(r)).cell(x);
      csv.end_row();
    }
  }
}

int cmd_sim(const Common& common, const std::string& snapshots) {
  Config cfg = resolve(common);
  if (!snapshots.empty()) cfg.sim.snapshots = parse_times(snapshots);
  cfg.sim.seeds = cfg.sim.resolved_seeds(cfg.model.seed);
  const fs::path out = common.out;

  SnapshotPlan plan;
  plan.times = cfg.sim.snapshots;
  plan.tracked = cfg.sim.tracked;
  plan.record_ranks = cfg.sim.record_ranks;
  const ReplicationResult res = run_replications(cfg.model, cfg.initial, plan, cfg.sim.seeds, cfg.jobs);

  for (std::size_t k = 0; k < plan.times.size(); ++k) {
    std::vector<const EmpiricalMeasure*> parts;
    for (const auto& run : res.runs) parts.push_back(&run.snapshots[k].measure);
    write_snapshot(out / ("snapshot_" + time_tag(plan.times[k]) + ".csv"), parts);
  }
  {
    CsvWriter csv(out / "stats.csv", {"t", "mean", "m2", "var", "stderr"});
    for (std::size_t k = 0; k < res.averaged.size(); ++k) {
      const auto& a = res.averaged[k];
      double se = a.mean_se;
      if (res.runs.size() == 1) se = std::sqrt(a.variance / static_cast<double>(cfg.model.n));
      csv.cell(a.t).cell(a.mean).cell(a.second_moment).cell(a.variance).cell(se);
      csv.end_row();
    }
  }
  if (plan.record_ranks) {
    CsvWriter csv(out / "ranks.csv", {"r", "count"});
    for (std::size_t r = 0; r < static_cast<std::size_t>(cfg.model.n); ++r) {
      long long count = 0;
      for (const auto& run : res.runs) count += run.rank_histogram[r];
      csv.cell(static_cast<long long>(r + 1)).cell(count);
      csv.end_row();
    }
  }
  if (!plan.tracked.empty()) {
    CsvWriter csv(out / "tracked.csv", {"replication", "queue", "t", "x_hat", "l_hat"});
    for (std::size_t r = 0; r < res.runs.size(); ++r) {
      for (std::size_t q = 0; q < plan.tracked.size(); ++q) {
        for (std::size_t k = 0; k < plan.times.size(); ++k) {
          const auto& p = res.runs[r].tracked[q][k];
          csv.cell(static_cast<long long>(r)).cell(static_cast<long long>(plan.tracked[q])).cell(plan.times[k]);
          csv.cell(p.x_hat).cell(p.l_hat);
          csv.end_row();
        }
      }
    }
  }
  write_manifest(make_manifest("sim", cfg), out / "manifest.json");
  return 0;
}

void write_stationary(const fs::path& path, const PdeCoeffs& coeffs, double x_max, double dx) {
  const StationaryProfile st = stationary(coeffs);
  const GridSpec spec = GridSpec::with_dx(x_max, dx);
  CsvWriter csv(path, {"x", "v", "u"});
  for (std::size_t j = 0; j <= spec.m; ++j) {
    const double x = x_max * static_cast<double>(j) / static_cast<double>(spec.m);
    csv.cell(x).cell(st.v(x)).cell(st.u(x));
    csv.end_row();
  }
}

int cmd_pde(const Common& common, const std::string& times) {
  Config cfg = resolve(common);
  if (!times.empty()) cfg.pde.times = parse_times(times);
  const fs::path out = common.out;
  const DerivedConstants d = derive(cfg.model);
  const PdeCoeffs coeffs = PdeCoeffs::from(d);
  const auto grids = pde_snapshots(coeffs, cfg.initial, cfg.pde, cfg.pde.times);
  {
    CsvWriter macro(out / "macro.csv", {"t", "m_mac", "sigma_mac"});
    for (const auto& g : grids) {
      const DensityProfile dens = density(g);
      CsvWriter csv(out / ("v_" + time_tag(g.t) + ".csv"), {"x", "v", "u"});
      for (std::size_t j = 0; j <= g.m; ++j) {
        csv.cell(g.x(j)).cell(g.v[static_cast<Eigen::Index>(j)]).cell(dens.u[static_cast<Eigen::Index>(j)]);
        csv.end_row();
      }
      const MacroStats ms = macro_stats(g);
      macro.cell(g.t).cell(ms.m_mac).cell(ms.sigma_mac);
      macro.end_row();
    }
  }
  if (d.rho < 0.0 && !grids.empty()) write_stationary(out / "stationary.csv", coeffs, grids.front().x_max, grids.front().dx);
  write_manifest(make_manifest("pde", cfg), out / "manifest.json");
  return 0;
}

int cmd_mv(const Common& common, const std::string& mode, const std::string& times) {
  Config cfg = resolve(common);
  if (!mode.empty()) cfg.mv.mode = mv_mode_from_string(mode);
  if (!times.empty()) cfg.mv.times = parse_times(times);
  const fs::path out = common.out;
  const DerivedConstants d = derive(cfg.model);
  const PdeCoeffs pc = PdeCoeffs::from(d);
  DriftSource drift;
  switch (cfg.mv.mode) {
    case MvMode::pde_fed: {
      const double x_max = cfg.pde.x_max > 0.0 ? cfg.pde.x_max : default_x_max(pc, cfg.initial.support_max());
      EvolveOptions opts;
      opts.cfl = cfg.pde.cfl;
      opts.dt_cap = cfg.pde.dt_cap;
      const double horizon = cfg.mv.times.empty() ? 0.0 : cfg.mv.times.back();
      drift = DriftSource::pde_fed(std::make_shared<TailHistory>(
          evolve_with_history(init_tail(cfg.initial, GridSpec::with_dx(x_max, cfg.pde.dx), pc), horizon, opts)));
      break;
    }
    case MvMode::self: drift = DriftSource::self_consistent(); break;
    case MvMode::stationary: drift = DriftSource::stationary(stationary(d)); break;
  }
  const MvOutput res =
      mv_run(cfg.mv.particles, cfg.initial, MvCoeffs::from(d), drift, cfg.mv.dt, cfg.mv.times, cfg.model.seed, cfg.jobs);
  CsvWriter stats_csv(out / "stats.csv", {"t", "mean", "m2", "var", "stderr", "mean_local_time"});
  for (const auto& s : res.snapshots) {
    const EmpiricalMeasure* part = &s.measure;
    write_snapshot(out / ("snapshot_" + time_tag(s.t) + ".csv"), std::span(&part, 1));
    stats_csv.cell(s.t).cell(s.stats.mean).cell(s.stats.second_moment).cell(s.stats.variance);
    stats_csv.cell(std::sqrt(s.stats.variance / static_cast<double>(s.stats.size))).cell(s.mean_local_time);
    stats_csv.end_row();
  }
  write_manifest(make_manifest("mv", cfg), out / "manifest.json");
  return 0;
}

int cmd_stationary(const Common& common, double x_max, double dx) {
  Config cfg = resolve(common);
  if (x_max > 0.0) cfg.pde.x_max = x_max;
  if (dx > 0.0) cfg.pde.dx = dx;
  if (cfg.pde.x_max <= 0.0) cfg.pde.x_max = 60.0;
  const fs::path out = common.out;
  const DerivedConstants d = derive(cfg.model);
  const StationaryProfile st = stationary(d);
  write_stationary(out / "stationary.csv", st.coeffs, cfg.pde.x_max, cfg.pde.dx);
  const MacroStats ms = stationary_macro_stats(st);
  CsvWriter csv(out / "macro.csv", {"rho", "alpha", "m_mac", "sigma_mac", "robin_residual"});
  csv.cell(d.rho).cell(st.alpha).cell(ms.m_mac).cell(ms.sigma_mac).cell(st.robin_residual());
  csv.end_row();
  write_manifest(make_manifest("stationary", cfg), out / "manifest.json");
  return 0;
}

/// Probability that the minimum-rank pick is r, by direct counting over the
/// sampled index sets (independent of the product formula in rank_law).
double counting_oracle(std::size_t n, int ell, Replacement mode, std::size_t r) {
  const auto count_ge = [&](std::size_t k) -> long double {
    // sets (or tuples) drawn entirely from the n - k + 1 largest ranks >= k
    const long double pool = static_cast<long double>(n - k + 1);
    if (mode == Replacement::with) return std::pow(pool / static_cast<long double>(n), ell);
    long double p = 1.0L;
    for (int i = 0; i < ell; ++i) p *= (pool - i) / static_cast<long double>(n - static_cast<std::size_t>(i));
    return pool < ell ? 0.0L : p;
  };
  return static_cast<double>(count_ge(r) - (r < n ? count_ge(r + 1) : 0.0L));
}

int cmd_routing(const Common& common, std::int64_t n_opt, int ell_opt, const std::string& repl) {
  Config cfg = resolve(common);
  if (n_opt > 0) cfg.model.n = n_opt;
  if (ell_opt > 0) cfg.model.ell = ell_opt;
  if (!repl.empty()) cfg.model.replacement = replacement_from_string(repl);
  cfg.model.validate();
  const auto n = static_cast<std::size_t>(cfg.model.n);
  const RankLaw law = rank_law(n, cfg.model.ell, cfg.model.replacement);
  std::vector<double> oracle;
  if (n <= 12) {
    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i) x[i] = static_cast<double>(i);
    oracle = enumerate_selection_law(x, cfg.model.ell, cfg.model.replacement);
  } else {
    for (std::size_t r = 1; r <= n; ++r) oracle.push_back(counting_oracle(n, cfg.model.ell, cfg.model.replacement, r));
  }
  const fs::path out = common.out;
  CsvWriter csv(out / "routing.csv", {"r", "p_paper", "p_oracle", "abs_err"});
  for (std::size_t r = 1; r <= n; ++r) {
    csv.cell(static_cast<long long>(r)).cell(law(r)).cell(oracle[r - 1]).cell(std::abs(law(r) - oracle[r - 1]));
    csv.end_row();
  }
  write_manifest(make_manifest("routing-check", cfg), out / "manifest.json");
  return 0;
}

int cmd_experiment(const Common& common, const std::string& name) {
  Config cfg = resolve(common);
  if (!name.empty()) cfg.experiment.name = name;
  const Report report = run_experiment(experiment_spec(cfg));
  const bool ok = emit_report(report, common.out);
  for (const auto& c : report.checks) {
    std::printf("%s %s value=%s tol=%s\n", c.pass ? "PASS" : "FAIL", c.name.c_str(), fmt12(c.value).c_str(),
                fmt12(c.tolerance).c_str());
  }
  return ok ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Heavy-traffic load balancing: queue simulator, limit PDE and particle system"};
  app.set_version_flag("--version", std::string(HYDROBALANCE_VERSION));
  app.require_subcommand(1);

  Common common;
  std::string snapshots, times, mode, name, repl;
  std::int64_t n = 0;
  int ell = 0;
  double x_max = 0.0, dx = 0.0;

  auto* sim = app.add_subcommand("sim", "Discrete-event simulation of the n-server system");
  add_common(sim, common);
  sim->add_option("--snapshots", snapshots, "Snapshot times, comma separated");

  auto* pde = app.add_subcommand("pde", "Solve the tail equation");
  add_common(pde, common);
  pde->add_option("--times", times, "Output times, comma separated");

  auto* mv = app.add_subcommand("mv", "Particle approximation of the McKean-Vlasov limit");
  add_common(mv, common);
  mv->add_option("--mode", mode, "pde-fed | self | stationary");
  mv->add_option("--times", times, "Snapshot times, comma separated");

  auto* st = app.add_subcommand("stationary", "Closed-form stationary profile");
  add_common(st, common);
  st->add_option("--x-max", x_max, "Right end of the output grid (default: pde.x_max, else 60)");
  st->add_option("--dx", dx, "Output grid spacing (default: pde.dx)");

  auto* routing = app.add_subcommand("routing-check", "Rank law against exact enumeration");
  add_common(routing, common);
  routing->add_option("--n", n, "Number of queues");
  routing->add_option("--ell", ell, "Choices per arrival");
  routing->add_option("--replacement", repl, "without | with");

  auto* exp = app.add_subcommand("experiment", "Run a named experiment and write a report");
  add_common(exp, common);
  exp->add_option("--name", name, "hydro | mv_vs_pde | stationary_limits | routing_check | invariance | variance_tracking");

  CLI11_PARSE(app, argc, argv);
  try {
    if (*sim) return cmd_sim(common, snapshots);
    if (*pde) return cmd_pde(common, times);
    if (*mv) return cmd_mv(common, mode, times);
    if (*st) return cmd_stationary(common, x_max, dx);
    if (*routing) return cmd_routing(common, n, ell, repl);
    if (*exp) return cmd_experiment(common, name);
  } catch (const std::exception& e) {
    std::cerr << "hydrobalance: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
