#pragma once

#include <Eigen/Core>

#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

#include "hydrobalance/initial_law.hpp"
#include "hydrobalance/measure.hpp"
#include "hydrobalance/params.hpp"

namespace hydrobalance {

/// Coefficients of the tail equation  v_t = (c1 v - b v^ell)_x + a v_xx,  v(0,t) = 1.
struct PdeCoeffs {
  double a = 1.0;
  double c1 = 0.0;
  double b = 0.0;
  int ell = 2;

  static PdeCoeffs from(const DerivedConstants& d) { return {d.a, d.c1, d.b, d.ell}; }

  /// f(z) = c1 z - b z^ell
  template <typename Scalar>
  Scalar flux(Scalar z) const {
    using std::pow;
    return Scalar(c1) * z - Scalar(b) * pow(z, ell);
  }
  template <typename Scalar>
  Scalar flux_prime(Scalar z) const {
    using std::pow;
    return Scalar(c1) - Scalar(b * ell) * pow(z, ell - 1);
  }
};

struct GridSpec {
  double x_max = 60.0;
  std::size_t m = 6000;  ///< cells; nodes are j*dx, j = 0..m

  static GridSpec with_dx(double x_max, double dx);
};

/// x_max = 6 * (a / (c1 (ell - 1)) + support_max), with |c1| floored at 1e-3.
double default_x_max(const PdeCoeffs& coeffs, double support_max);

/// Tail v(x, t) = xi_t(x, inf) sampled at nodes x_j = j*dx.
struct TailGrid {
  double x_max = 0.0;
  std::size_t m = 0;
  double dx = 0.0;
  Eigen::VectorXd v;
  double t = 0.0;
  PdeCoeffs coeffs;

  double x(std::size_t j) const { return static_cast<double>(j) * dx; }
  std::vector<double> nodes() const;
  /// Linear interpolation; 1 left of 0, 0 right of x_max.
  double value(double x) const;
  TailFunction as_tail() const;
};

/// v(x_j, 0) = initial.tail(x_j), with v(0) pinned to 1 (the boundary value for t > 0).
/// Throws when the law's support reaches x_max.
TailGrid init_tail(const InitialLaw& initial, const GridSpec& spec, const PdeCoeffs& coeffs);

/// Sampled closed-form profile on the grid nodes.
TailGrid grid_from_function(const std::function<double(double)>& v, const GridSpec& spec, const PdeCoeffs& coeffs,
                            double t = 0.0);

struct EvolveOptions {
  double cfl = 0.5;
  double dt_cap = 0.05;
  double range_tolerance = 1e-6;
  double monotone_tolerance = 1e-8;
  /// Called with the grid after every completed step.
  std::function<void(const TailGrid&)> observer;
};

struct EvolveDiagnostics {
  std::size_t steps = 0;
  double min_v = 1.0;
  double max_v = 0.0;
  double max_increase = 0.0;  ///< largest v[j+1] - v[j] seen over all steps
  double dt_min = 0.0;
  double dt_max = 0.0;
  double far_field = 0.0;  ///< largest v at the last interior node
};

/// IMEX stepping to t_end. Advection by a first-order upwind (Engquist-Osher)
/// flux splitting on the sign of f'(v); diffusion by backward Euler with
/// Dirichlet ends v(0) = 1, v(x_max) = 0. dt = min(cfl*dx/max|f'(v)|, dt_cap).
/// Throws std::runtime_error if the range or monotonicity check fails.
TailGrid evolve(TailGrid grid, double t_end, const EvolveOptions& options = {}, EvolveDiagnostics* diag = nullptr);

struct DensityProfile {
  Eigen::VectorXd u;       ///< -v_x
  double mass = 0.0;       ///< v[0] - v[m]
  double robin_residual;   ///< (c1 - b ell) u(0) + a u_x(0)
};

/// Centered differences inside, first-order one-sided at the ends (so the
/// trapezoid integral of u telescopes to the mass). The Robin residual uses
/// second-order one-sided stencils.
DensityProfile density(const TailGrid& grid);

// ---- stationary solution ---------------------------------------------------

/// Closed-form stationary tail  v = w^{-1/(ell-1)},  w = (1-alpha) e^{k x} + alpha,
/// k = (c1/a)(ell-1), alpha = b/c1; evaluated through log w to avoid overflow.
template <typename Scalar>
Scalar stationary_log_w(Scalar x, const PdeCoeffs& c) {
  using std::exp;
  using std::log;
  const Scalar alpha = Scalar(c.b) / Scalar(c.c1);
  const Scalar k = Scalar(c.c1) / Scalar(c.a) * Scalar(c.ell - 1);
  return k * x + log((Scalar(1) - alpha) + alpha * exp(-k * x));
}

template <typename Scalar>
Scalar stationary_tail(Scalar x, const PdeCoeffs& c) {
  using std::exp;
  return exp(-stationary_log_w(x, c) / Scalar(c.ell - 1));
}

template <typename Scalar>
Scalar stationary_density(Scalar x, const PdeCoeffs& c) {
  using std::exp;
  using std::log;
  const Scalar alpha = Scalar(c.b) / Scalar(c.c1);
  const Scalar k = Scalar(c.c1) / Scalar(c.a) * Scalar(c.ell - 1);
  const Scalar lw = stationary_log_w(x, c);
  return Scalar(c.c1) / Scalar(c.a) * (Scalar(1) - alpha) *
         exp(k * x - Scalar(c.ell) / Scalar(c.ell - 1) * lw);
}

template <typename Scalar>
Scalar stationary_density_prime(Scalar x, const PdeCoeffs& c) {
  using std::exp;
  const Scalar alpha = Scalar(c.b) / Scalar(c.c1);
  const Scalar k = Scalar(c.c1) / Scalar(c.a) * Scalar(c.ell - 1);
  const Scalar lw = stationary_log_w(x, c);
  // u = A e^{kx} w^{-p}, p = ell/(ell-1);  u' = u (k - p k (1-alpha) e^{kx} / w)
  const Scalar p = Scalar(c.ell) / Scalar(c.ell - 1);
  const Scalar share = (Scalar(1) - alpha) * exp(k * x - lw);
  return stationary_density(x, c) * (k - p * k * share);
}

struct StationaryProfile {
  PdeCoeffs coeffs;
  double alpha;

  double w(double x) const { return std::exp(stationary_log_w(x, coeffs)); }
  double v(double x) const { return stationary_tail(x, coeffs); }
  double u(double x) const { return stationary_density(x, coeffs); }
  double u_prime(double x) const { return stationary_density_prime(x, coeffs); }
  /// (c1 - b ell) u(0) + a u'(0) from the analytic derivative.
  double robin_residual() const;

  Eigen::VectorXd sample_v(std::span<const double> xs) const;
  Eigen::VectorXd sample_u(std::span<const double> xs) const;
  TailFunction as_tail(double x_max) const;
};

/// Requires rho < 0 (equivalently c1 > b); throws std::domain_error otherwise.
StationaryProfile stationary(const DerivedConstants& derived);
StationaryProfile stationary(const PdeCoeffs& coeffs);

/// Independent check of the closed form: integrates v' = -(c1 v - b v^ell)/a,
/// v(0) = 1, with an adaptive Dormand-Prince 5(4) stepper and returns v at xs
/// (sorted, nonnegative).
std::vector<double> stationary_ode_oracle(const PdeCoeffs& coeffs, std::span<const double> xs, double tol = 1e-13);

// ---- macroscopic indices ---------------------------------------------------

struct MacroStats {
  double m_mac = 0.0;       ///< integral of v
  double second = 0.0;      ///< 2 * integral of x v
  double sigma_mac = 0.0;   ///< sqrt(second - m_mac^2)
  double truncated_mass = 0.0;  ///< v at the last interior node
};

/// Trapezoid quadrature; throws std::runtime_error if more than 1e-3 of the
/// mass sits at the far boundary.
MacroStats macro_stats(const TailGrid& grid);

/// m_mac and sigma_mac of the closed-form stationary law by composite Simpson
/// on [0, x_hi], x_hi chosen where the tail bound drops below 1e-16.
MacroStats stationary_macro_stats(const StationaryProfile& s);

// ---- history and weak form -------------------------------------------------

/// Sequence of tail grids on a common mesh.
struct TailHistory {
  double x_max = 0.0;
  std::size_t m = 0;
  double dx = 0.0;
  PdeCoeffs coeffs;
  std::vector<double> times;
  std::vector<Eigen::VectorXd> v;

  void push(const TailGrid& grid);
  double t_begin() const { return times.front(); }
  double t_end() const { return times.back(); }
  /// Linear in x and t.
  double value(double x, double t) const;
  /// Grid at a stored index.
  TailGrid at(std::size_t k) const;
};

/// Evolves to t_end storing every step (including the initial grid).
TailHistory evolve_with_history(const TailGrid& initial, double t_end, const EvolveOptions& options = {},
                                EvolveDiagnostics* diag = nullptr);

struct TestFunction {
  std::function<double(double)> phi, dphi, d2phi;

  /// phi(x) = x (1 - x/L)^4 on [0, L], zero beyond; phi(0) = 0, C^2 at L.
  static TestFunction polynomial_bump(double support);
  static TestFunction zero();
};

/// | <v(T),phi> - <v(0),phi> + int <f(v),phi'> ds - a int <v,phi''> ds - a phi'(0) T |
/// with Simpson in x (trapezoid if m is odd) and trapezoid in t over the stored steps.
double weak_residual(const TailHistory& history, const TestFunction& test);

}  // namespace hydrobalance
