#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include "hydrobalance/rng.hpp"

namespace hydrobalance {

enum class Replacement { without, with };

std::string_view to_string(Replacement r);
Replacement replacement_from_string(std::string_view s);

enum class ServiceKind { exponential, deterministic, lognormal, hyperexp2, uniform_shifted };

std::string_view to_string(ServiceKind k);
ServiceKind service_kind_from_string(std::string_view s);

/// Unscaled service-time law with mean exactly 1, parameterized by its
/// standard deviation. Admissible `sigma` per kind:
///   exponential      sigma == 1
///   deterministic    sigma == 0
///   lognormal        sigma > 0      (log-variance log(1 + sigma^2))
///   hyperexp2        sigma >= 1     (balanced means)
///   uniform_shifted  0 < sigma <= 1/sqrt(3)  (uniform on [1-h, 1+h], h = sqrt(3) sigma)
struct ServiceDist {
  ServiceKind kind = ServiceKind::exponential;
  double sigma = 1.0;

  static ServiceDist exponential() { return {ServiceKind::exponential, 1.0}; }
  static ServiceDist deterministic() { return {ServiceKind::deterministic, 0.0}; }
  static ServiceDist lognormal(double sigma) { return {ServiceKind::lognormal, sigma}; }
  static ServiceDist hyperexp2(double sigma) { return {ServiceKind::hyperexp2, sigma}; }
  static ServiceDist uniform_shifted(double sigma) { return {ServiceKind::uniform_shifted, sigma}; }

  /// Throws std::invalid_argument when `sigma` is not admissible for `kind`.
  void validate() const;

  double mean() const { return 1.0; }
  double variance() const { return sigma * sigma; }

  bool operator==(const ServiceDist&) const = default;
};

/// One draw from the unscaled law (mean 1). Prelimit callers divide by mu_n.
double service_sample(const ServiceDist& dist, Rng& rng);

struct ModelParams {
  std::int64_t n = 1;
  double lambda = 1.0;
  double lambda_hat = 0.0;
  double b = 0.0;
  double mu = 1.0;
  double mu_hat = 0.0;
  int ell = 2;
  Replacement replacement = Replacement::without;
  ServiceDist service{};
  std::uint64_t seed = 0;

  /// Throws std::invalid_argument on any violated constraint.
  void validate() const;

  bool operator==(const ModelParams&) const = default;
};

/// Prelimit rates and the limit-regime coefficients they induce.
struct DerivedConstants {
  double lambda_n;   ///< per-queue dedicated arrival rate n*lambda + sqrt(n)*lambda_hat
  double lambda0_n;  ///< load balancing stream rate b*n^{3/2}
  double mu_n;       ///< service rate n*mu + sqrt(n)*mu_hat
  double rho;        ///< load parameter (lambda_hat + b - mu_hat)/lambda
  double b1;         ///< lambda_hat - mu_hat
  double c1;         ///< -b1
  double b0;         ///< b*ell
  double sigma_ser;
  double sigma2;     ///< lambda*(1 + sigma_ser^2)
  double a;          ///< sigma2/2
  // Carried along so limit-layer solvers need nothing else.
  double lambda;
  double b;
  int ell;
};

DerivedConstants derive(const ModelParams& params);

/// Model with the constants used throughout the examples: lambda = mu = 1,
/// rho = -0.01, c1 = 0.21, b = 0.2, ell = 4, exponential service (a = 1).
ModelParams reference_model(std::int64_t n, std::uint64_t seed = 1);

}  // namespace hydrobalance
