#include "hydrobalance/config.hpp"

#include <fstream>
#include <set>
#include <stdexcept>

namespace hydrobalance {

namespace {

void only_keys(const Json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw std::invalid_argument(where + ": expected an object");
  for (const auto& [key, _] : j.items()) {
    if (!allowed.count(key)) throw std::invalid_argument(where + ": unknown field '" + key + "'");
  }
}

template <typename T>
void read(const Json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

Json service_json(const ServiceDist& s) { return {{"kind", std::string(to_string(s.kind))}, {"sigma", s.sigma}}; }

ServiceDist service_from_json(const Json& j) {
  only_keys(j, {"kind", "sigma"}, "service");
  ServiceDist s;
  s.kind = service_kind_from_string(j.at("kind").get<std::string>());
  s.sigma = s.kind == ServiceKind::exponential ? 1.0 : s.kind == ServiceKind::deterministic ? 0.0 : 1.0;
  read(j, "sigma", s.sigma);
  s.validate();
  return s;
}

}  // namespace

std::string to_string(MvMode m) {
  switch (m) {
    case MvMode::pde_fed: return "pde-fed";
    case MvMode::self: return "self";
    case MvMode::stationary: return "stationary";
  }
  return "?";
}

MvMode mv_mode_from_string(const std::string& s) {
  if (s == "pde-fed") return MvMode::pde_fed;
  if (s == "self") return MvMode::self;
  if (s == "stationary") return MvMode::stationary;
  throw std::invalid_argument("unknown mv mode: " + s);
}

std::vector<std::uint64_t> SimSettings::resolved_seeds(std::uint64_t base) const {
  if (!seeds.empty()) return seeds;
  std::vector<std::uint64_t> out(replications);
  for (std::size_t r = 0; r < replications; ++r) out[r] = base + r;
  return out;
}

Json to_json(const ModelParams& p) {
  return {{"n", p.n},
          {"lambda", p.lambda},
          {"lambda_hat", p.lambda_hat},
          {"b", p.b},
          {"mu", p.mu},
          {"mu_hat", p.mu_hat},
          {"ell", p.ell},
          {"replacement", std::string(to_string(p.replacement))},
          {"service", service_json(p.service)},
          {"seed", p.seed}};
}

ModelParams model_from_json(const Json& j) {
  only_keys(j, {"n", "lambda", "lambda_hat", "b", "mu", "mu_hat", "ell", "replacement", "service", "seed"}, "model");
  ModelParams p = reference_model(2000, 1);
  read(j, "n", p.n);
  read(j, "lambda", p.lambda);
  read(j, "lambda_hat", p.lambda_hat);
  read(j, "b", p.b);
  read(j, "mu", p.mu);
  read(j, "mu_hat", p.mu_hat);
  read(j, "ell", p.ell);
  if (j.contains("replacement")) p.replacement = replacement_from_string(j.at("replacement").get<std::string>());
  if (j.contains("service")) p.service = service_from_json(j.at("service"));
  read(j, "seed", p.seed);
  p.validate();
  return p;
}

Json to_json(const InitialLaw& law) {
  if (const auto* d = std::get_if<InitialLaw::Dirac>(&law.law)) return {{"kind", "dirac"}, {"x0", d->x0}};
  if (const auto* u = std::get_if<InitialLaw::Uniform>(&law.law)) return {{"kind", "uniform"}, {"lo", u->lo}, {"hi", u->hi}};
  if (const auto* s = std::get_if<InitialLaw::FromSamples>(&law.law)) return {{"kind", "samples"}, {"samples", s->samples}};
  throw std::invalid_argument("initial law given as a tail function cannot be serialized");
}

InitialLaw initial_from_json(const Json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  InitialLaw law;
  if (kind == "dirac") {
    only_keys(j, {"kind", "x0"}, "initial");
    law = InitialLaw::dirac(j.value("x0", 0.0));
  } else if (kind == "uniform") {
    only_keys(j, {"kind", "lo", "hi"}, "initial");
    law = InitialLaw::uniform(j.value("lo", 0.0), j.value("hi", 1.0));
  } else if (kind == "samples") {
    only_keys(j, {"kind", "samples"}, "initial");
    law = InitialLaw::from_samples(j.at("samples").get<std::vector<double>>());
  } else {
    throw std::invalid_argument("unknown initial law kind: " + kind);
  }
  law.validate();
  return law;
}

Json to_json(const Config& c) {
  Json j;
  j["model"] = to_json(c.model);
  j["initial"] = to_json(c.initial);
  j["sim"] = {{"snapshots", c.sim.snapshots},
              {"replications", c.sim.replications},
              {"seeds", c.sim.seeds},
              {"tracked", c.sim.tracked},
              {"record_ranks", c.sim.record_ranks}};
  j["pde"] = {{"x_max", c.pde.x_max}, {"dx", c.pde.dx}, {"cfl", c.pde.cfl}, {"dt_cap", c.pde.dt_cap}, {"times", c.pde.times}};
  j["mv"] = {{"particles", c.mv.particles}, {"dt", c.mv.dt}, {"mode", to_string(c.mv.mode)}, {"times", c.mv.times}};
  const auto& e = c.experiment;
  j["experiment"] = {{"name", e.name},
                     {"replications", e.replications},
                     {"seed_base", e.seed_base},
                     {"times", e.times},
                     {"compare_n", e.compare_n},
                     {"alt_service", service_json(e.alt_service)},
                     {"particles", e.particles},
                     {"mv_dt", e.mv_dt},
                     {"chaos_sizes", e.chaos_sizes},
                     {"chaos_replications", e.chaos_replications},
                     {"chaos_dt", e.chaos_dt},
                     {"b_values", e.b_values},
                     {"x_range", e.x_range},
                     {"routing_trials", e.routing_trials},
                     {"tolerances", e.tolerances}};
  j["jobs"] = c.jobs;
  return j;
}

Config config_from_json(const Json& j) {
  only_keys(j, {"model", "initial", "sim", "pde", "mv", "experiment", "jobs", "manifest"}, "config");
  Config c;
  if (j.contains("model")) c.model = model_from_json(j.at("model"));
  if (j.contains("initial")) c.initial = initial_from_json(j.at("initial"));
  if (j.contains("sim")) {
    const auto& s = j.at("sim");
    only_keys(s, {"snapshots", "replications", "seeds", "tracked", "record_ranks"}, "sim");
    read(s, "snapshots", c.sim.snapshots);
    read(s, "replications", c.sim.replications);
    read(s, "seeds", c.sim.seeds);
    read(s, "tracked", c.sim.tracked);
    read(s, "record_ranks", c.sim.record_ranks);
  }
  if (j.contains("pde")) {
    const auto& s = j.at("pde");
    only_keys(s, {"x_max", "dx", "cfl", "dt_cap", "times"}, "pde");
    read(s, "x_max", c.pde.x_max);
    read(s, "dx", c.pde.dx);
    read(s, "cfl", c.pde.cfl);
    read(s, "dt_cap", c.pde.dt_cap);
    read(s, "times", c.pde.times);
  }
  if (j.contains("mv")) {
    const auto& s = j.at("mv");
    only_keys(s, {"particles", "dt", "mode", "times"}, "mv");
    read(s, "particles", c.mv.particles);
    read(s, "dt", c.mv.dt);
    if (s.contains("mode")) c.mv.mode = mv_mode_from_string(s.at("mode").get<std::string>());
    read(s, "times", c.mv.times);
  }
  if (j.contains("experiment")) {
    const auto& s = j.at("experiment");
    only_keys(s,
              {"name", "replications", "seed_base", "times", "compare_n", "alt_service", "particles", "mv_dt",
               "chaos_sizes", "chaos_replications", "chaos_dt", "b_values", "x_range", "routing_trials", "tolerances"},
              "experiment");
    auto& e = c.experiment;
    read(s, "name", e.name);
    read(s, "replications", e.replications);
    read(s, "seed_base", e.seed_base);
    read(s, "times", e.times);
    read(s, "compare_n", e.compare_n);
    if (s.contains("alt_service")) e.alt_service = service_from_json(s.at("alt_service"));
    read(s, "particles", e.particles);
    read(s, "mv_dt", e.mv_dt);
    read(s, "chaos_sizes", e.chaos_sizes);
    read(s, "chaos_replications", e.chaos_replications);
    read(s, "chaos_dt", e.chaos_dt);
    read(s, "b_values", e.b_values);
    read(s, "x_range", e.x_range);
    read(s, "routing_trials", e.routing_trials);
    read(s, "tolerances", e.tolerances);
  }
  read(j, "jobs", c.jobs);
  if (c.jobs == 0) throw std::invalid_argument("jobs must be at least 1");
  return c;
}

Config load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config " + path.string());
  return config_from_json(Json::parse(in));
}

}  // namespace hydrobalance
