#include "hydrobalance/params.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace hydrobalance {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw std::invalid_argument(what);
}

}  // namespace

std::string_view to_string(Replacement r) {
  return r == Replacement::without ? "without" : "with";
}

Replacement replacement_from_string(std::string_view s) {
  if (s == "without") return Replacement::without;
  if (s == "with") return Replacement::with;
  throw std::invalid_argument("unknown replacement mode: " + std::string(s));
}

std::string_view to_string(ServiceKind k) {
  switch (k) {
    case ServiceKind::exponential: return "exponential";
    case ServiceKind::deterministic: return "deterministic";
    case ServiceKind::lognormal: return "lognormal";
    case ServiceKind::hyperexp2: return "hyperexp2";
    case ServiceKind::uniform_shifted: return "uniform_shifted";
  }
  return "?";
}

ServiceKind service_kind_from_string(std::string_view s) {
  for (auto k : {ServiceKind::exponential, ServiceKind::deterministic, ServiceKind::lognormal,
                 ServiceKind::hyperexp2, ServiceKind::uniform_shifted}) {
    if (to_string(k) == s) return k;
  }
  throw std::invalid_argument("unknown service kind: " + std::string(s));
}

void ServiceDist::validate() const {
  require(std::isfinite(sigma), "service sigma must be finite");
  switch (kind) {
    case ServiceKind::exponential:
      require(sigma == 1.0, "exponential service has sigma = 1");
      break;
    case ServiceKind::deterministic:
      require(sigma == 0.0, "deterministic service has sigma = 0");
      break;
    case ServiceKind::lognormal:
      require(sigma > 0.0, "lognormal service needs sigma > 0");
      break;
    case ServiceKind::hyperexp2:
      require(sigma >= 1.0, "hyperexp2 service needs sigma >= 1");
      break;
    case ServiceKind::uniform_shifted:
      require(sigma > 0.0 && sigma <= 1.0 / std::sqrt(3.0),
              "uniform_shifted service needs 0 < sigma <= 1/sqrt(3)");
      break;
  }
}

double service_sample(const ServiceDist& dist, Rng& rng) {
  switch (dist.kind) {
    case ServiceKind::exponential:
      return rng.exponential(1.0);
    case ServiceKind::deterministic:
      return 1.0;
    case ServiceKind::lognormal: {
      const double s2 = std::log1p(dist.sigma * dist.sigma);
      return std::exp(-0.5 * s2 + std::sqrt(s2) * rng.normal());
    }
    case ServiceKind::hyperexp2: {
      // Balanced means: p1/r1 = p2/r2 = 1/2.
      const double c2 = dist.sigma * dist.sigma;
      const double p1 = 0.5 * (1.0 + std::sqrt((c2 - 1.0) / (c2 + 1.0)));
      const double u = rng.uniform01();
      const double rate = u < p1 ? 2.0 * p1 : 2.0 * (1.0 - p1);
      return rng.exponential(rate);
    }
    case ServiceKind::uniform_shifted: {
      const double h = std::sqrt(3.0) * dist.sigma;
      // (0,1] keeps the draw strictly positive when h == 1.
      return 1.0 + h * (2.0 * rng.uniform_open() - 1.0);
    }
  }
  return 1.0;
}

void ModelParams::validate() const {
  require(n >= 1, "n must be positive");
  for (double v : {lambda, lambda_hat, b, mu, mu_hat}) require(std::isfinite(v), "non-finite rate parameter");
  require(lambda > 0.0, "lambda must be positive");
  require(mu > 0.0, "mu must be positive");
  require(b >= 0.0, "b must be nonnegative");
  require(lambda == mu, "critical load requires lambda == mu");
  require(ell >= 2, "ell must be at least 2");
  require(replacement == Replacement::with || n >= ell, "sampling without replacement needs n >= ell");
  service.validate();
}

DerivedConstants derive(const ModelParams& params) {
  params.validate();
  const double n = static_cast<double>(params.n);
  const double sqrt_n = std::sqrt(n);
  DerivedConstants d{};
  d.lambda_n = n * params.lambda + sqrt_n * params.lambda_hat;
  d.lambda0_n = params.b * n * sqrt_n;
  d.mu_n = n * params.mu + sqrt_n * params.mu_hat;
  d.rho = (params.lambda_hat + params.b - params.mu_hat) / params.lambda;
  d.b1 = params.lambda_hat - params.mu_hat;
  d.c1 = -d.b1;
  d.b0 = params.b * params.ell;
  d.sigma_ser = params.service.sigma;
  d.sigma2 = params.lambda * (1.0 + d.sigma_ser * d.sigma_ser);
  d.a = 0.5 * d.sigma2;
  d.lambda = params.lambda;
  d.b = params.b;
  d.ell = params.ell;
  for (double v : {d.lambda_n, d.lambda0_n, d.mu_n, d.rho, d.c1, d.b0, d.sigma2, d.a}) {
    if (!std::isfinite(v)) throw std::overflow_error("derived constant is not finite");
  }
  require(d.lambda_n > 0.0, "dedicated arrival rate lambda_n must be positive");
  require(d.mu_n > 0.0, "service rate mu_n must be positive");
  return d;
}

ModelParams reference_model(std::int64_t n, std::uint64_t seed) {
  ModelParams p;
  p.n = n;
  p.lambda = 1.0;
  p.mu = 1.0;
  p.lambda_hat = 0.0;
  p.mu_hat = 0.21;
  p.b = 0.2;
  p.ell = 4;
  p.service = ServiceDist::exponential();
  p.seed = seed;
  return p;
}

}  // namespace hydrobalance
