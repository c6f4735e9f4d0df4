#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "hydrobalance/config.hpp"
#include "hydrobalance/des.hpp"
#include "hydrobalance/mv.hpp"
#include "hydrobalance/pde.hpp"

namespace hydrobalance {

enum class ExperimentName { hydro, mv_vs_pde, stationary_limits, routing_check, invariance, variance_tracking };

std::string to_string(ExperimentName e);
ExperimentName experiment_from_string(const std::string& s);

struct ExperimentSpec {
  ExperimentName name = ExperimentName::hydro;
  Config config;

  /// Named tolerance: config.experiment.tolerances override, else the default.
  double tolerance(const std::string& key) const;
  /// Throws std::invalid_argument on nonpositive tolerances or bad times.
  void validate() const;
};

ExperimentSpec experiment_spec(const Config& config);

/// Default tolerance table, by experiment and key.
double default_tolerance(ExperimentName e, const std::string& key);

struct MetricRow {
  std::string label;
  double t;
  double ks;
  double w1;
  double m_mac;
  double sigma_n;
  double sigma_mac;
  double rel_err;
};

/// `value < tolerance` passes.
struct Check {
  std::string name;
  double value;
  double tolerance;
  bool pass;
};

struct Report {
  std::string name;
  std::vector<MetricRow> rows;
  std::vector<Check> checks;
  Json manifest;

  bool pass() const;
  void add_check(std::string check_name, double value, double tolerance);
};

/// Tail grids at each requested time, evolved from the initial law on the
/// grid given by `settings` (x_max = 0 selects default_x_max).
std::vector<TailGrid> pde_snapshots(const PdeCoeffs& coeffs, const InitialLaw& initial, const PdeSettings& settings,
                                    std::span<const double> times, EvolveDiagnostics* diag = nullptr);

/// Per-replication comparison of a DES run set against PDE snapshots.
struct HydroComparison {
  std::vector<double> times;
  std::vector<std::vector<double>> ks;  ///< [time][replication]
  std::vector<std::vector<double>> w1;
  std::vector<AveragedSnapshot> averaged;
  std::vector<MacroStats> macro;
  std::vector<EmpiricalMeasure> pooled;  ///< all replications pooled, per time
};

HydroComparison compare_hydro(const ModelParams& params, const InitialLaw& initial, const PdeSettings& pde,
                              std::span<const double> times, std::span<const std::uint64_t> seeds, unsigned jobs);

double median(std::vector<double> values);
double mean(std::span<const double> values);

Report run_experiment(const ExperimentSpec& spec);

/// Writes report.csv, checks.csv and manifest.json into `out`; returns report.pass().
bool emit_report(const Report& report, const std::filesystem::path& out);

/// Manifest document: the resolved configuration plus a "manifest" block
/// (command, version). Feeding it back through --config reproduces the run.
Json make_manifest(const std::string& command, const Config& config);
void write_manifest(const Json& manifest, const std::filesystem::path& path);

}  // namespace hydrobalance
