#include "hydrobalance/harness.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "hydrobalance/csv.hpp"
#include "hydrobalance/parallel.hpp"
#include "hydrobalance/routing.hpp"

namespace hydrobalance {

namespace {

constexpr double nan = std::numeric_limits<double>::quiet_NaN();

struct NamedExperiment {
  ExperimentName e;
  const char* name;
};

constexpr NamedExperiment kExperiments[] = {
    {ExperimentName::hydro, "hydro"},
    {ExperimentName::mv_vs_pde, "mv_vs_pde"},
    {ExperimentName::stationary_limits, "stationary_limits"},
    {ExperimentName::routing_check, "routing_check"},
    {ExperimentName::invariance, "invariance"},
    {ExperimentName::variance_tracking, "variance_tracking"},
};

std::string label_of(const char* key, double v) { return std::string(key) + "=" + fmt12(v); }

}  // namespace

std::string to_string(ExperimentName e) {
  for (const auto& ne : kExperiments) {
    if (ne.e == e) return ne.name;
  }
  return "?";
}

ExperimentName experiment_from_string(const std::string& s) {
  for (const auto& ne : kExperiments) {
    if (s == ne.name) return ne.e;
  }
  throw std::invalid_argument("unknown experiment: " + s);
}

double default_tolerance(ExperimentName e, const std::string& key) {
  switch (e) {
    case ExperimentName::hydro:
      if (key == "ks_mean") return 0.05;
      if (key == "median_ordering") return 0.0;
      if (key == "sigma_rel") return 0.10;
      break;
    case ExperimentName::variance_tracking:
      if (key == "sigma_rel") return 0.10;
      break;
    case ExperimentName::mv_vs_pde:
      if (key == "ks_pde_fed") return 0.01;
      if (key == "ks_self_vs_fed") return 0.02;
      if (key == "chaos_ordering") return 0.0;
      if (key == "chaos_fed_z") return 3.0;
      break;
    case ExperimentName::stationary_limits:
      if (key == "exp_sup") return 0.01;
      if (key == "collapse_mmac") return 0.05;
      break;
    case ExperimentName::routing_check:
      if (key == "law_err") return 1e-12;
      if (key == "freq_z") return 4.0;
      break;
    case ExperimentName::invariance:
      if (key == "ks_pair") return 0.05;
      break;
  }
  throw std::invalid_argument("no tolerance '" + key + "' for experiment " + to_string(e));
}

double ExperimentSpec::tolerance(const std::string& key) const {
  const auto& overrides = config.experiment.tolerances;
  if (auto it = overrides.find(key); it != overrides.end()) return it->second;
  return default_tolerance(name, key);
}

void ExperimentSpec::validate() const {
  for (const auto& [key, value] : config.experiment.tolerances) {
    default_tolerance(name, key);
    if (key != "median_ordering" && key != "chaos_ordering" && !(value > 0.0)) {
      throw std::invalid_argument("tolerance '" + key + "' must be positive");
    }
  }
  const auto& times = config.experiment.times;
  if (!std::is_sorted(times.begin(), times.end()) || (!times.empty() && times.front() < 0.0)) {
    throw std::invalid_argument("experiment times must be sorted and nonnegative");
  }
  if (config.experiment.replications == 0) throw std::invalid_argument("experiment needs at least one replication");
}

ExperimentSpec experiment_spec(const Config& config) {
  ExperimentSpec spec{experiment_from_string(config.experiment.name), config};
  spec.validate();
  return spec;
}

bool Report::pass() const {
  return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.pass; });
}

void Report::add_check(std::string check_name, double value, double tolerance) {
  checks.push_back({std::move(check_name), value, tolerance, value < tolerance});
}

double median(std::vector<double> values) {
  if (values.empty()) return nan;
  const auto mid = values.size() / 2;
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid), values.end());
  double m = values[mid];
  if (values.size() % 2 == 0) {
    m = 0.5 * (m + *std::max_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid)));
  }
  return m;
}

double mean(std::span<const double> values) {
  if (values.empty()) return nan;
  return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
}

std::vector<TailGrid> pde_snapshots(const PdeCoeffs& coeffs, const InitialLaw& initial, const PdeSettings& settings,
                                    std::span<const double> times, EvolveDiagnostics* diag) {
  const double x_max = settings.x_max > 0.0 ? settings.x_max : default_x_max(coeffs, initial.support_max());
  TailGrid grid = init_tail(initial, GridSpec::with_dx(x_max, settings.dx), coeffs);
  EvolveOptions opts;
  opts.cfl = settings.cfl;
  opts.dt_cap = settings.dt_cap;
  std::vector<TailGrid> out;
  for (double t : times) {
    grid = evolve(std::move(grid), t, opts, diag);
    out.push_back(grid);
  }
  return out;
}

HydroComparison compare_hydro(const ModelParams& params, const InitialLaw& initial, const PdeSettings& pde,
                              std::span<const double> times, std::span<const std::uint64_t> seeds, unsigned jobs) {
  const DerivedConstants derived = derive(params);
  const auto grids = pde_snapshots(PdeCoeffs::from(derived), initial, pde, times);
  SnapshotPlan plan;
  plan.times.assign(times.begin(), times.end());
  const ReplicationResult reps = run_replications(params, initial, plan, seeds, jobs);

  HydroComparison c;
  c.times = plan.times;
  c.averaged = reps.averaged;
  for (std::size_t k = 0; k < times.size(); ++k) {
    const TailFunction tail = grids[k].as_tail();
    std::vector<double> ks(seeds.size()), w1(seeds.size());
    std::vector<EmpiricalMeasure> parts;
    for (std::size_t r = 0; r < seeds.size(); ++r) {
      const auto& m = reps.runs[r].snapshots[k].measure;
      ks[r] = ks_distance(m, tail);
      w1[r] = w1_distance(m, tail);
      parts.push_back(m);
    }
    c.ks.push_back(std::move(ks));
    c.w1.push_back(std::move(w1));
    c.macro.push_back(macro_stats(grids[k]));
    c.pooled.push_back(pool(parts));
  }
  return c;
}

namespace {

std::vector<std::uint64_t> seed_list(std::uint64_t base, std::size_t count) {
  std::vector<std::uint64_t> seeds(count);
  for (std::size_t r = 0; r < count; ++r) seeds[r] = base + r;
  return seeds;
}

void hydro_rows(Report& report, const std::string& label, const HydroComparison& c) {
  for (std::size_t k = 0; k < c.times.size(); ++k) {
    const double sigma_mac = c.macro[k].sigma_mac;
    const double sigma_n = c.averaged[k].sigma_n;
    report.rows.push_back({label, c.times[k], mean(c.ks[k]), mean(c.w1[k]), c.macro[k].m_mac, sigma_n, sigma_mac,
                           std::abs(sigma_n - sigma_mac) / sigma_mac});
  }
}

Report run_hydro(const ExperimentSpec& spec, bool variance_only) {
  const auto& cfg = spec.config;
  const auto& e = cfg.experiment;
  Report report;
  const auto seeds = seed_list(e.seed_base, e.replications);
  const HydroComparison c = compare_hydro(cfg.model, cfg.initial, cfg.pde, e.times, seeds, cfg.jobs);
  const std::string label = "n=" + std::to_string(cfg.model.n);
  hydro_rows(report, label, c);
  for (std::size_t k = 0; k < c.times.size(); ++k) {
    const double rel = report.rows[k].rel_err;
    if (c.times[k] > 0.0) report.add_check("sigma_rel@" + label_of("t", c.times[k]), rel, spec.tolerance("sigma_rel"));
    if (!variance_only) report.add_check("ks_mean@" + label_of("t", c.times[k]), mean(c.ks[k]), spec.tolerance("ks_mean"));
  }
  if (!variance_only && e.compare_n > 0) {
    ModelParams small = cfg.model;
    small.n = e.compare_n;
    const HydroComparison cs = compare_hydro(small, cfg.initial, cfg.pde, e.times, seeds, cfg.jobs);
    hydro_rows(report, "n=" + std::to_string(e.compare_n), cs);
    for (std::size_t k = 0; k < c.times.size(); ++k) {
      if (c.times[k] <= 0.0) continue;
      report.add_check("median_ks_n" + std::to_string(cfg.model.n) + "_minus_n" + std::to_string(e.compare_n) + "@" +
                           label_of("t", c.times[k]),
                       median(c.ks[k]) - median(cs.ks[k]), spec.tolerance("median_ordering"));
    }
  }
  return report;
}

Report run_invariance(const ExperimentSpec& spec) {
  const auto& cfg = spec.config;
  const auto& e = cfg.experiment;
  Report report;
  ModelParams alt = cfg.model;
  alt.service = e.alt_service;
  const HydroComparison a = compare_hydro(cfg.model, cfg.initial, cfg.pde, e.times, seed_list(e.seed_base, e.replications), cfg.jobs);
  const HydroComparison b =
      compare_hydro(alt, cfg.initial, cfg.pde, e.times, seed_list(e.seed_base + 100000, e.replications), cfg.jobs);
  const std::string la = std::string(to_string(cfg.model.service.kind));
  const std::string lb = std::string(to_string(alt.service.kind));
  hydro_rows(report, la, a);
  hydro_rows(report, lb, b);
  for (std::size_t k = 0; k < e.times.size(); ++k) {
    const double pair = ks_distance(a.pooled[k], b.pooled[k]);
    report.rows.push_back({la + "_vs_" + lb, e.times[k], pair, nan, nan, a.averaged[k].sigma_n, b.averaged[k].sigma_n,
                           std::abs(a.averaged[k].sigma_n - b.averaged[k].sigma_n) / b.averaged[k].sigma_n});
    if (e.times[k] > 0.0) report.add_check("ks_pair@" + label_of("t", e.times[k]), pair, spec.tolerance("ks_pair"));
  }
  return report;
}

Report run_mv_vs_pde(const ExperimentSpec& spec) {
  const auto& cfg = spec.config;
  const auto& e = cfg.experiment;
  Report report;
  const DerivedConstants d = derive(cfg.model);
  const PdeCoeffs pc = PdeCoeffs::from(d);
  const MvCoeffs mc = MvCoeffs::from(d);
  const double horizon = e.times.empty() ? 0.0 : e.times.back();
  const double x_max = cfg.pde.x_max > 0.0 ? cfg.pde.x_max : default_x_max(pc, cfg.initial.support_max());
  EvolveOptions opts;
  opts.cfl = cfg.pde.cfl;
  opts.dt_cap = cfg.pde.dt_cap;
  auto history = std::make_shared<TailHistory>(
      evolve_with_history(init_tail(cfg.initial, GridSpec::with_dx(x_max, cfg.pde.dx), pc), horizon, opts));
  const DriftSource fed = DriftSource::pde_fed(history);

  const MvOutput fed_out = mv_run(e.particles, cfg.initial, mc, fed, e.mv_dt, e.times, e.seed_base, cfg.jobs);
  const MvOutput self_out =
      mv_run(e.particles, cfg.initial, mc, DriftSource::self_consistent(), e.mv_dt, e.times, e.seed_base + 1, cfg.jobs);
  for (std::size_t k = 0; k < e.times.size(); ++k) {
    const double t = e.times[k];
    TailFunction pde_tail = TailFunction::piecewise_linear(
        [&] {
          std::vector<double> xs(history->m + 1);
          for (std::size_t j = 0; j <= history->m; ++j) xs[j] = static_cast<double>(j) * history->dx;
          return xs;
        }(),
        [&] {
          std::vector<double> vs(history->m + 1);
          for (std::size_t j = 0; j <= history->m; ++j) vs[j] = history->value(static_cast<double>(j) * history->dx, t);
          return vs;
        }());
    const auto& mf = fed_out.snapshots[k].measure;
    const auto& ms = self_out.snapshots[k].measure;
    const double ks_fed = ks_distance(mf, pde_tail);
    const double ks_self = ks_distance(ms, pde_tail);
    const double ks_pair = ks_distance(ms, mf);
    report.rows.push_back({"pde_fed", t, ks_fed, w1_distance(mf, pde_tail), fed_out.snapshots[k].stats.mean,
                           std::sqrt(fed_out.snapshots[k].stats.variance), nan, nan});
    report.rows.push_back({"self", t, ks_self, w1_distance(ms, pde_tail), self_out.snapshots[k].stats.mean,
                           std::sqrt(self_out.snapshots[k].stats.variance), nan, nan});
    report.rows.push_back({"self_vs_fed", t, ks_pair, nan, nan, nan, nan, nan});
    if (t > 0.0) {
      report.add_check("ks_pde_fed@" + label_of("t", t), ks_fed, spec.tolerance("ks_pde_fed"));
      report.add_check("ks_self_vs_fed@" + label_of("t", t), ks_pair, spec.tolerance("ks_self_vs_fed"));
    }
  }

  // Propagation of chaos: pairwise indicator covariance at the median of the PDE law.
  if (!e.chaos_sizes.empty() && horizon > 0.0) {
    double lo = 0.0, hi = history->x_max;
    for (int it = 0; it < 100; ++it) {
      const double mid = 0.5 * (lo + hi);
      (history->value(mid, horizon) > 0.5 ? lo : hi) = mid;
    }
    const double threshold = 0.5 * (lo + hi);
    const std::vector<double> at{horizon};
    auto covariance = [&](std::size_t n, const DriftSource& drift, std::uint64_t base) {
      std::vector<EmpiricalMeasure> reps(e.chaos_replications);
      parallel_for(reps.size(), cfg.jobs, [&](std::size_t r) {
        reps[r] = mv_run(n, cfg.initial, mc, drift, e.chaos_dt, at, base + r).snapshots.back().measure;
      });
      return chaos_diagnostic(reps, threshold);
    };
    std::vector<ChaosEstimate> self_cov;
    for (std::size_t n : e.chaos_sizes) {
      self_cov.push_back(covariance(n, DriftSource::self_consistent(), e.seed_base + 1000000 + 10000 * n));
      report.rows.push_back({"chaos_self_N=" + std::to_string(n), horizon, self_cov.back().covariance,
                             self_cov.back().stderr_, nan, nan, nan, nan});
    }
    for (std::size_t k = 1; k < self_cov.size(); ++k) {
      report.add_check("chaos_|cov|_N" + std::to_string(e.chaos_sizes[k]) + "_minus_N" + std::to_string(e.chaos_sizes[k - 1]),
                       std::abs(self_cov[k].covariance) - std::abs(self_cov[k - 1].covariance),
                       spec.tolerance("chaos_ordering"));
    }
    const std::size_t n0 = e.chaos_sizes.front();
    const ChaosEstimate fed_cov = covariance(n0, fed, e.seed_base + 2000000);
    report.rows.push_back({"chaos_fed_N=" + std::to_string(n0), horizon, fed_cov.covariance, fed_cov.stderr_, nan,
                           nan, nan, nan});
    report.add_check("chaos_fed_|z|", fed_cov.stderr_ > 0.0 ? std::abs(fed_cov.covariance) / fed_cov.stderr_ : 0.0,
                     spec.tolerance("chaos_fed_z"));
  }
  return report;
}

Report run_stationary_limits(const ExperimentSpec& spec) {
  const auto& cfg = spec.config;
  const auto& e = cfg.experiment;
  Report report;
  const DerivedConstants d = derive(cfg.model);
  if (!(d.rho < 0.0)) throw std::domain_error("stationary_limits needs rho < 0");
  const double rate = d.lambda * std::abs(d.rho) / d.a;
  std::vector<double> bs = e.b_values;
  std::sort(bs.begin(), bs.end());
  double first_sup = nan, last_mmac = nan;
  for (double b : bs) {
    // (ell, rho, lambda, a) held fixed: c1 = b - lambda rho.
    const PdeCoeffs c{d.a, b - d.lambda * d.rho, b, d.ell};
    const StationaryProfile st = stationary(c);
    const std::size_t cells = 20000;
    const double h = e.x_range / static_cast<double>(cells);
    double sup = 0.0, l1 = 0.0, prev = 0.0;
    for (std::size_t j = 0; j <= cells; ++j) {
      const double x = static_cast<double>(j) * h;
      const double diff = std::abs(st.v(x) - std::exp(-rate * x));
      sup = std::max(sup, diff);
      if (j > 0) l1 += 0.5 * (prev + diff) * h;
      prev = diff;
    }
    const MacroStats ms = stationary_macro_stats(st);
    report.rows.push_back({label_of("b", b), nan, sup, l1, ms.m_mac, nan, ms.sigma_mac, nan});
    if (b == bs.front()) first_sup = sup;
    last_mmac = ms.m_mac;
  }
  if (!bs.empty()) {
    report.add_check("exp_sup@" + label_of("b", bs.front()), first_sup, spec.tolerance("exp_sup"));
    report.add_check("collapse_mmac@" + label_of("b", bs.back()), last_mmac, spec.tolerance("collapse_mmac"));
  }
  return report;
}

Report run_routing_check(const ExperimentSpec& spec) {
  const auto& cfg = spec.config;
  const auto& e = cfg.experiment;
  Report report;
  const auto n = static_cast<std::size_t>(cfg.model.n);
  const int ell = cfg.model.ell;
  Rng rng(e.seed_base, 77);
  for (Replacement mode : {Replacement::without, Replacement::with}) {
    const RankLaw law = rank_law(n, ell, mode);
    double law_err = 0.0;
    for (int trial = 0; trial < 51; ++trial) {
      std::vector<double> x(n);
      for (std::size_t i = 0; i < n; ++i) {
        x[i] = trial == 0 ? static_cast<double>(i) : static_cast<double>(rng.uniform_index(n / 2 + 1));
      }
      const auto oracle = enumerate_selection_law(x, ell, mode);
      const auto r = ranks(std::span<const double>(x));
      for (std::size_t i = 0; i < n; ++i) law_err = std::max(law_err, std::abs(oracle[i] - law(r[i])));
    }
    report.add_check("law_err_" + std::string(to_string(mode)), law_err, spec.tolerance("law_err"));

    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i) x[i] = static_cast<double>((i * 7) % 3);
    const auto oracle = enumerate_selection_law(x, ell, mode);
    const std::span<const double> xs(x);
    std::vector<double> direct(n, 0.0), by_rank(n, 0.0);
    for (std::size_t k = 0; k < e.routing_trials; ++k) {
      direct[select_direct(xs, ell, mode, rng)] += 1.0;
      by_rank[select_by_rank(xs, law, rng)] += 1.0;
    }
    double z = 0.0;
    const double trials = static_cast<double>(e.routing_trials);
    for (std::size_t i = 0; i < n; ++i) {
      const double p = oracle[i];
      for (double hits : {direct[i], by_rank[i]}) {
        const double f = hits / trials;
        if (p == 0.0) {
          if (hits > 0.0) z = std::numeric_limits<double>::infinity();
          continue;
        }
        z = std::max(z, std::abs(f - p) / std::sqrt(p * (1.0 - p) / trials));
      }
    }
    report.add_check("freq_z_" + std::string(to_string(mode)), z, spec.tolerance("freq_z"));
  }
  return report;
}

}  // namespace

Report run_experiment(const ExperimentSpec& spec) {
  spec.validate();
  Report report;
  try {
    switch (spec.name) {
      case ExperimentName::hydro: report = run_hydro(spec, false); break;
      case ExperimentName::variance_tracking: report = run_hydro(spec, true); break;
      case ExperimentName::invariance: report = run_invariance(spec); break;
      case ExperimentName::mv_vs_pde: report = run_mv_vs_pde(spec); break;
      case ExperimentName::stationary_limits: report = run_stationary_limits(spec); break;
      case ExperimentName::routing_check: report = run_routing_check(spec); break;
    }
  } catch (const std::exception& ex) {
    throw std::runtime_error("experiment " + to_string(spec.name) + " failed: " + ex.what());
  }
  report.name = to_string(spec.name);
  report.manifest = make_manifest("experiment", spec.config);
  return report;
}

bool emit_report(const Report& report, const std::filesystem::path& out) {
  std::filesystem::create_directories(out);
  {
    CsvWriter csv(out / "report.csv", {"label", "t", "ks", "w1", "m_mac", "sigma_n", "sigma_mac", "rel_err"});
    for (const auto& r : report.rows) {
      csv.cell(r.label).cell(r.t).cell(r.ks).cell(r.w1).cell(r.m_mac).cell(r.sigma_n).cell(r.sigma_mac).cell(r.rel_err);
      csv.end_row();
    }
  }
  {
    CsvWriter csv(out / "checks.csv", {"check", "value", "tolerance", "pass"});
    for (const auto& c : report.checks) {
      csv.cell(c.name).cell(c.value).cell(c.tolerance).cell(std::string_view(c.pass ? "1" : "0"));
      csv.end_row();
    }
  }
  write_manifest(report.manifest, out / "manifest.json");
  return report.pass();
}

Json make_manifest(const std::string& command, const Config& config) {
  Json j = to_json(config);
  j["manifest"] = {{"command", command}, {"version", HYDROBALANCE_VERSION}, {"rng", "xoshiro256** seeded by SplitMix64"}};
  return j;
}

void write_manifest(const Json& manifest, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << manifest.dump(2) << '\n';
}

}  // namespace hydrobalance
