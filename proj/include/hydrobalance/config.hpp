#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "hydrobalance/initial_law.hpp"
#include "hydrobalance/params.hpp"
#include "json.hpp"

namespace hydrobalance {

using Json = nlohmann::ordered_json;

struct SimSettings {
  std::vector<double> snapshots{0.0};
  std::size_t replications = 1;
  std::vector<std::uint64_t> seeds;  ///< empty: model.seed + r
  std::vector<std::size_t> tracked;
  bool record_ranks = false;

  std::vector<std::uint64_t> resolved_seeds(std::uint64_t base) const;
};

struct PdeSettings {
  double x_max = 0.0;  ///< 0: default_x_max
  double dx = 0.01;
  double cfl = 0.5;
  double dt_cap = 0.05;
  std::vector<double> times{1.0};
};

enum class MvMode { pde_fed, self, stationary };
std::string to_string(MvMode m);
MvMode mv_mode_from_string(const std::string& s);

struct MvSettings {
  std::size_t particles = 10000;
  double dt = 1e-3;
  MvMode mode = MvMode::pde_fed;
  std::vector<double> times{1.0};
};

/// Knobs for `hydrobalance experiment`; which ones matter depends on `name`.
struct ExperimentSettings {
  std::string name = "hydro";
  std::size_t replications = 20;
  std::uint64_t seed_base = 1;
  std::vector<double> times{1.0, 5.0};
  std::int64_t compare_n = 0;  ///< hydro: also run at this smaller n and compare medians
  ServiceDist alt_service = ServiceDist::lognormal(1.0);
  std::size_t particles = 100000;
  double mv_dt = 1e-3;
  std::vector<std::size_t> chaos_sizes{1000, 10000};
  std::size_t chaos_replications = 200;
  double chaos_dt = 0.01;
  std::vector<double> b_values{1e-3, 1e-2, 1e-1, 1.0, 10.0, 100.0};
  double x_range = 200.0;
  std::size_t routing_trials = 1000000;
  std::map<std::string, double> tolerances;  ///< overrides of the per-experiment defaults
};

/// Whole structured-text configuration document. Every section is optional
/// on input; unknown keys are rejected. Missing model fields take the
/// reference_model(2000, 1) values.
struct Config {
  ModelParams model = reference_model(2000, 1);
  InitialLaw initial = InitialLaw::uniform(0.0, 10.0);
  SimSettings sim;
  PdeSettings pde;
  MvSettings mv;
  ExperimentSettings experiment;
  unsigned jobs = 1;
};

Json to_json(const ModelParams& p);
ModelParams model_from_json(const Json& j);
Json to_json(const InitialLaw& law);
InitialLaw initial_from_json(const Json& j);

Json to_json(const Config& c);
/// A top-level "manifest" object (written by the CLI) is accepted and ignored.
Config config_from_json(const Json& j);
Config load_config(const std::filesystem::path& path);

}  // namespace hydrobalance
