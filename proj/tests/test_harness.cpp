#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "doctest.h"
#include "hydrobalance/config.hpp"
#include "hydrobalance/csv.hpp"
#include "hydrobalance/harness.hpp"

using namespace hydrobalance;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("hydrobalance_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

int cli(const std::string& args) {
  const std::string cmd = std::string(HYDROBALANCE_CLI) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("twelve significant digits") {
  CHECK(fmt12(1.0) == "1");
  CHECK(fmt12(1.0 / 3.0) == "0.333333333333");
  CHECK(fmt12(123456789.123456789) == "123456789.123");
  CHECK(fmt12(-2.5e-20) == "-2.5e-20");
}

TEST_CASE("csv writer and time lists") {
  std::ostringstream os;
  {
    CsvWriter csv(os, {"a", "b"});
    csv.cell(0.1).cell(3LL);
    csv.end_row();
  }
  CHECK(os.str() == "a,b\n0.1,3\n");
  CHECK(parse_times("1,5,0.25") == std::vector<double>{1, 5, 0.25});
  CHECK(parse_times("") == std::vector<double>{});
  CHECK_THROWS(parse_times("1,x"));
}

TEST_CASE("median and mean") {
  CHECK(median({3, 1, 2}) == 2);
  CHECK(median({4, 1, 3, 2}) == 2.5);
  const std::vector<double> v{1, 2, 6};
  CHECK(mean(v) == 3);
}

TEST_CASE("config round trip") {
  Config c;
  c.model = reference_model(500, 7);
  c.model.service = ServiceDist::lognormal(1.0);
  c.initial = InitialLaw::dirac(2.0);
  c.sim.snapshots = {0.5, 1.0};
  c.sim.tracked = {1, 2};
  c.pde.dx = 0.02;
  c.mv.mode = MvMode::self;
  c.experiment.name = "routing_check";
  c.experiment.tolerances["law_err"] = 1e-10;
  c.jobs = 2;
  const Json j = to_json(c);
  const Config back = config_from_json(j);
  CHECK(to_json(back) == j);
  CHECK(back.model == c.model);
  CHECK(back.mv.mode == MvMode::self);
}

TEST_CASE("config parsing rules") {
  CHECK_THROWS_AS(config_from_json(Json::parse(R"({"modle": {}})")), std::invalid_argument);
  CHECK_THROWS_AS(config_from_json(Json::parse(R"({"model": {"nn": 3}})")), std::invalid_argument);
  CHECK_THROWS_AS(config_from_json(Json::parse(R"({"model": {"mu": 2}})")), std::invalid_argument);
  CHECK_THROWS_AS(config_from_json(Json::parse(R"({"jobs": 0})")), std::invalid_argument);
  CHECK_THROWS(config_from_json(Json::parse(R"({"initial": {"kind": "gamma"}})")));
  const Config partial = config_from_json(Json::parse(R"({"model": {"n": 50}, "manifest": {"command": "sim"}})"));
  CHECK(partial.model.n == 50);
  CHECK(partial.model.b == 0.2);
  CHECK(partial.model.ell == 4);
}

TEST_CASE("tolerances and spec validation") {
  Config c;
  c.experiment.name = "stationary_limits";
  CHECK(experiment_spec(c).tolerance("exp_sup") == 0.01);
  c.experiment.tolerances["exp_sup"] = 0.05;
  CHECK(experiment_spec(c).tolerance("exp_sup") == 0.05);
  c.experiment.tolerances["ks_mean"] = 0.1;
  CHECK_THROWS(experiment_spec(c));
  c.experiment.tolerances.erase("ks_mean");
  c.experiment.tolerances["exp_sup"] = -1.0;
  CHECK_THROWS_AS(experiment_spec(c), std::invalid_argument);
  c.experiment.name = "nope";
  CHECK_THROWS_AS(experiment_spec(c), std::invalid_argument);
  for (auto e : {ExperimentName::hydro, ExperimentName::mv_vs_pde, ExperimentName::stationary_limits,
                 ExperimentName::routing_check, ExperimentName::invariance, ExperimentName::variance_tracking}) {
    CHECK(experiment_from_string(to_string(e)) == e);
  }
}

TEST_CASE("report pass semantics") {
  Report r;
  CHECK(r.pass());
  r.add_check("a", 0.5, 1.0);
  CHECK(r.pass());
  r.add_check("b", 1.0, 1.0);
  CHECK_FALSE(r.pass());
  CHECK_FALSE(r.checks.back().pass);
}

TEST_CASE("empty report writes header-only files") {
  const fs::path dir = scratch("empty");
  Report r;
  r.manifest = make_manifest("experiment", Config{});
  CHECK(emit_report(r, dir));
  CHECK(slurp(dir / "report.csv") == "label,t,ks,w1,m_mac,sigma_n,sigma_mac,rel_err\n");
  CHECK(slurp(dir / "checks.csv") == "check,value,tolerance,pass\n");
  const Json m = Json::parse(slurp(dir / "manifest.json"));
  CHECK(m["manifest"]["command"] == "experiment");
  CHECK(config_from_json(m).model == Config{}.model);
}

TEST_CASE("routing experiment") {
  Config c;
  c.model.n = 6;
  c.model.ell = 3;
  c.experiment.name = "routing_check";
  c.experiment.routing_trials = 100000;
  const Report r = run_experiment(experiment_spec(c));
  REQUIRE(r.checks.size() == 4);
  CHECK(r.pass());
  c.model.n = 20;
  CHECK_THROWS(run_experiment(experiment_spec(c)));
}

TEST_CASE("stationary limits experiment") {
  Config c;
  c.experiment.name = "stationary_limits";
  c.experiment.b_values = {1e-3, 100.0};
  const Report r = run_experiment(experiment_spec(c));
  REQUIRE(r.rows.size() == 2);
  REQUIRE(r.checks.size() == 2);
  // Independent evaluation: v = ((1-alpha) e^{k x} + alpha)^{-1/3}, c1 = b + 0.01.
  const double b = 1e-3, c1 = b + 0.01, alpha = b / c1, k = 3.0 * c1;
  double sup = 0.0;
  for (int j = 0; j <= 200000; ++j) {
    const double x = 200.0 * j / 200000.0;
    const double v = std::pow((1 - alpha) * std::exp(k * x) + alpha, -1.0 / 3.0);
    sup = std::max(sup, std::abs(v - std::exp(-0.01 * x)));
  }
  CHECK(r.checks[0].value == doctest::Approx(sup).epsilon(1e-4));
  CHECK(r.checks[1].value < 0.05);
  CHECK(r.checks[1].pass);
}

TEST_CASE("hydro comparison at small scale") {
  Config c;
  c.model = reference_model(200, 1);
  c.pde.dx = 0.02;
  c.experiment.name = "variance_tracking";
  c.experiment.replications = 4;
  c.experiment.times = {0.0, 0.5};
  const Report r = run_experiment(experiment_spec(c));
  REQUIRE(r.rows.size() == 2);
  CHECK(r.rows[0].t == 0.0);
  CHECK(r.rows[1].sigma_mac > 0.0);
  CHECK(r.rows[1].ks < 0.2);
  REQUIRE(r.checks.size() == 1);
  CHECK(r.checks[0].name == "sigma_rel@t=0.5");
}

TEST_CASE("cli exit status and manifest replay") {
  const fs::path dir = scratch("cli");
  CHECK(cli("stationary --out " + (dir / "a").string()) == 0);
  CHECK(cli("stationary --config " + (dir / "a" / "manifest.json").string() + " --out " + (dir / "b").string()) == 0);
  CHECK(slurp(dir / "a" / "stationary.csv") == slurp(dir / "b" / "stationary.csv"));
  CHECK(slurp(dir / "a" / "macro.csv") == slurp(dir / "b" / "macro.csv"));

  {
    std::ofstream cfg(dir / "strict.json");
    cfg << R"({"experiment": {"name": "stationary_limits", "b_values": [0.5], "tolerances": {"exp_sup": 1e-9}}})";
  }
  CHECK(cli("experiment --config " + (dir / "strict.json").string() + " --out " + (dir / "c").string()) == 2);
  CHECK(fs::exists(dir / "c" / "checks.csv"));
  CHECK(cli("experiment --name bogus --out " + (dir / "d").string()) == 1);
  CHECK(cli("sim --config " + (dir / "missing.json").string()) == 1);
}
