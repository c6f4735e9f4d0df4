#include "hydrobalance/pde.hpp"

#include <algorithm>
#include <array>
#include <boost/numeric/odeint.hpp>
#include <limits>
#include <string>

namespace hydrobalance {

GridSpec GridSpec::with_dx(double x_max, double dx) {
  const auto m = static_cast<std::size_t>(std::llround(x_max / dx));
  if (m < 2) throw std::invalid_argument("grid needs at least two cells");
  return {static_cast<double>(m) * dx, m};
}

double default_x_max(const PdeCoeffs& coeffs, double support_max) {
  const double c1 = std::max(std::abs(coeffs.c1), 1e-3);
  return 6.0 * (coeffs.a / (c1 * (coeffs.ell - 1)) + support_max);
}

std::vector<double> TailGrid::nodes() const {
  std::vector<double> xs(m + 1);
  for (std::size_t j = 0; j <= m; ++j) xs[j] = x(j);
  return xs;
}

double TailGrid::value(double xq) const {
  if (xq <= 0.0) return xq < 0.0 ? 1.0 : v[0];
  if (xq >= x_max) return 0.0;
  const double s = xq / dx;
  const auto j = std::min(static_cast<std::size_t>(s), m - 1);
  const double w = s - static_cast<double>(j);
  return (1.0 - w) * v[static_cast<Eigen::Index>(j)] + w * v[static_cast<Eigen::Index>(j + 1)];
}

TailFunction TailGrid::as_tail() const {
  return TailFunction::piecewise_linear(nodes(), std::vector<double>(v.data(), v.data() + v.size()));
}

namespace {

void check_spec(const GridSpec& spec) {
  if (!(spec.x_max > 0.0) || spec.m < 2) throw std::invalid_argument("invalid grid spec");
}

TailGrid empty_grid(const GridSpec& spec, const PdeCoeffs& coeffs, double t) {
  check_spec(spec);
  TailGrid g;
  g.x_max = spec.x_max;
  g.m = spec.m;
  g.dx = spec.x_max / static_cast<double>(spec.m);
  g.v = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(spec.m + 1));
  g.t = t;
  g.coeffs = coeffs;
  return g;
}

// Thomas algorithm for  -r u_{j-1} + (1 + 2r) u_j - r u_{j+1} = rhs_j.
template <typename Scalar>
void solve_constant_tridiagonal(Scalar r, Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& rhs,
                                Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& scratch) {
  const Eigen::Index n = rhs.size();
  scratch.resize(n);
  const Scalar diag = Scalar(1) + Scalar(2) * r;
  Scalar denom = diag;
  scratch[0] = -r / denom;
  rhs[0] /= denom;
  for (Eigen::Index i = 1; i < n; ++i) {
    denom = diag + r * scratch[i - 1];
    scratch[i] = -r / denom;
    rhs[i] = (rhs[i] + r * rhs[i - 1]) / denom;
  }
  for (Eigen::Index i = n - 2; i >= 0; --i) rhs[i] -= scratch[i] * rhs[i + 1];
}

// Engquist-Osher numerical flux for g = -f, g(z) = -c1 z + b z^ell, whose
// derivative is increasing on [0, 1]; `pivot` is where g' changes sign.
struct UpwindFlux {
  PdeCoeffs c;
  double pivot;
  double g_pivot;

  explicit UpwindFlux(const PdeCoeffs& coeffs) : c(coeffs) {
    if (c.c1 <= 0.0) {
      pivot = 0.0;
    } else if (c.b <= 0.0) {
      pivot = 1.0;
    } else {
      pivot = std::min(1.0, std::pow(c.c1 / (c.b * c.ell), 1.0 / (c.ell - 1)));
    }
    g_pivot = g(pivot);
  }
  double g(double z) const { return -c.flux(z); }
  double operator()(double left, double right) const {
    return g(std::max(left, pivot)) - g_pivot + g(std::min(right, pivot));
  }
};

}  // namespace

TailGrid init_tail(const InitialLaw& initial, const GridSpec& spec, const PdeCoeffs& coeffs) {
  initial.validate();
  TailGrid g = empty_grid(spec, coeffs, 0.0);
  if (initial.support_max() >= spec.x_max) {
    throw std::invalid_argument("initial law support reaches x_max = " + std::to_string(spec.x_max));
  }
  for (std::size_t j = 0; j <= g.m; ++j) g.v[static_cast<Eigen::Index>(j)] = initial.tail(g.x(j));
  g.v[0] = 1.0;
  return g;
}

TailGrid grid_from_function(const std::function<double(double)>& v, const GridSpec& spec, const PdeCoeffs& coeffs,
                            double t) {
  TailGrid g = empty_grid(spec, coeffs, t);
  for (std::size_t j = 0; j <= g.m; ++j) g.v[static_cast<Eigen::Index>(j)] = v(g.x(j));
  return g;
}

TailGrid evolve(TailGrid grid, double t_end, const EvolveOptions& options, EvolveDiagnostics* diag) {
  if (t_end < grid.t) throw std::invalid_argument("evolve: t_end before grid time");
  if (!(options.cfl > 0.0 && options.cfl <= 1.0)) throw std::invalid_argument("evolve: cfl must be in (0, 1]");
  const Eigen::Index m = static_cast<Eigen::Index>(grid.m);
  const double dx = grid.dx;
  const PdeCoeffs& c = grid.coeffs;
  const UpwindFlux flux(c);
  const double far_value = 0.0;

  Eigen::VectorXd face(m);   // face[j] = flux at x_{j+1/2}
  Eigen::VectorXd rhs(m - 1);
  Eigen::VectorXd scratch;
  EvolveDiagnostics local;
  EvolveDiagnostics& d = diag ? *diag : local;
  d.dt_min = std::numeric_limits<double>::infinity();

  const double time_eps = 1e-12 * std::max(1.0, t_end);
  while (grid.t < t_end - time_eps) {
    double speed = 0.0;
    for (Eigen::Index j = 0; j <= m; ++j) speed = std::max(speed, std::abs(c.flux_prime(grid.v[j])));
    double dt = options.dt_cap;
    if (speed > 0.0) dt = std::min(dt, options.cfl * dx / speed);
    dt = std::min(dt, t_end - grid.t);
    if (!(dt > 0.0)) throw std::runtime_error("evolve: non-positive time step");
    if (speed * dt > dx * (1.0 + 1e-12)) throw std::runtime_error("evolve: CFL condition violated");

    for (Eigen::Index j = 0; j < m; ++j) face[j] = flux(grid.v[j], grid.v[j + 1]);
    const double ratio = dt / dx;
    for (Eigen::Index j = 1; j < m; ++j) rhs[j - 1] = grid.v[j] - ratio * (face[j] - face[j - 1]);

    const double r = c.a * dt / (dx * dx);
    rhs[0] += r * 1.0;
    rhs[m - 2] += r * far_value;
    solve_constant_tridiagonal(r, rhs, scratch);

    grid.v[0] = 1.0;
    grid.v.segment(1, m - 1) = rhs;
    grid.v[m] = far_value;
    grid.t += dt;
    if (t_end - grid.t <= time_eps) grid.t = t_end;

    const double lo = grid.v.minCoeff();
    const double hi = grid.v.maxCoeff();
    double increase = 0.0;
    for (Eigen::Index j = 0; j < m; ++j) increase = std::max(increase, grid.v[j + 1] - grid.v[j]);
    d.min_v = std::min(d.min_v, lo);
    d.max_v = std::max(d.max_v, hi);
    d.max_increase = std::max(d.max_increase, increase);
    d.far_field = std::max(d.far_field, grid.v[m - 1]);
    d.dt_min = std::min(d.dt_min, dt);
    d.dt_max = std::max(d.dt_max, dt);
    ++d.steps;
    if (lo < -options.range_tolerance || hi > 1.0 + options.range_tolerance) {
      throw std::runtime_error("evolve: tail left [0, 1] at t = " + std::to_string(grid.t));
    }
    if (increase > options.monotone_tolerance) {
      throw std::runtime_error("evolve: tail lost monotonicity at t = " + std::to_string(grid.t));
    }
    grid.v = grid.v.cwiseMax(0.0).cwiseMin(1.0);
    if (options.observer) options.observer(grid);
  }
  if (d.steps == 0) d.dt_min = 0.0;
  return grid;
}

DensityProfile density(const TailGrid& grid) {
  const Eigen::Index m = static_cast<Eigen::Index>(grid.m);
  const double dx = grid.dx;
  const auto& v = grid.v;
  DensityProfile p;
  p.u.resize(m + 1);
  p.u[0] = -(v[1] - v[0]) / dx;
  p.u[m] = -(v[m] - v[m - 1]) / dx;
  for (Eigen::Index j = 1; j < m; ++j) p.u[j] = -(v[j + 1] - v[j - 1]) / (2.0 * dx);
  p.mass = v[0] - v[m];
  const double u0 = -(-3.0 * v[0] + 4.0 * v[1] - v[2]) / (2.0 * dx);
  const double ux0 = -(2.0 * v[0] - 5.0 * v[1] + 4.0 * v[2] - v[3]) / (dx * dx);
  const auto& c = grid.coeffs;
  p.robin_residual = (c.c1 - c.b * c.ell) * u0 + c.a * ux0;
  return p;
}

// ---- stationary ------------------------------------------------------------

double StationaryProfile::robin_residual() const {
  return (coeffs.c1 - coeffs.b * coeffs.ell) * u(0.0) + coeffs.a * u_prime(0.0);
}

Eigen::VectorXd StationaryProfile::sample_v(std::span<const double> xs) const {
  Eigen::VectorXd out(static_cast<Eigen::Index>(xs.size()));
  for (std::size_t j = 0; j < xs.size(); ++j) out[static_cast<Eigen::Index>(j)] = v(xs[j]);
  return out;
}

Eigen::VectorXd StationaryProfile::sample_u(std::span<const double> xs) const {
  Eigen::VectorXd out(static_cast<Eigen::Index>(xs.size()));
  for (std::size_t j = 0; j < xs.size(); ++j) out[static_cast<Eigen::Index>(j)] = u(xs[j]);
  return out;
}

TailFunction StationaryProfile::as_tail(double x_max) const {
  TailFunction f;
  const PdeCoeffs c = coeffs;
  f.value = [c](double x) { return x < 0.0 ? 1.0 : stationary_tail(x, c); };
  f.x_max = x_max;
  return f;
}

StationaryProfile stationary(const PdeCoeffs& coeffs) {
  if (!(coeffs.a > 0.0)) throw std::domain_error("stationary: a must be positive");
  if (coeffs.ell < 2) throw std::domain_error("stationary: ell must be at least 2");
  if (!(coeffs.b >= 0.0) || !(coeffs.c1 > coeffs.b)) {
    throw std::domain_error("stationary solution exists only for rho < 0 (c1 > b)");
  }
  return {coeffs, coeffs.b / coeffs.c1};
}

StationaryProfile stationary(const DerivedConstants& derived) {
  if (!(derived.rho < 0.0)) throw std::domain_error("stationary solution exists only for rho < 0");
  return stationary(PdeCoeffs::from(derived));
}

std::vector<double> stationary_ode_oracle(const PdeCoeffs& coeffs, std::span<const double> xs, double tol) {
  namespace odeint = boost::numeric::odeint;
  using State = std::array<double, 1>;
  if (!std::is_sorted(xs.begin(), xs.end()) || (!xs.empty() && xs.front() < 0.0)) {
    throw std::invalid_argument("stationary_ode_oracle: nodes must be sorted and nonnegative");
  }
  std::vector<double> out;
  out.reserve(xs.size());
  if (xs.empty()) return out;
  auto rhs = [&coeffs](const State& v, State& dv, double) { dv[0] = -coeffs.flux(v[0]) / coeffs.a; };
  State state{1.0};
  std::vector<double> times;
  times.reserve(xs.size() + 1);
  if (xs.front() > 0.0) times.push_back(0.0);
  times.insert(times.end(), xs.begin(), xs.end());
  const bool skip_first = xs.front() > 0.0;
  auto stepper = odeint::make_dense_output(tol, tol, odeint::runge_kutta_dopri5<State>());
  std::size_t k = 0;
  odeint::integrate_times(stepper, rhs, state, times.begin(), times.end(), 1e-3, [&](const State& v, double) {
    if (!(skip_first && k == 0)) out.push_back(v[0]);
    ++k;
  });
  return out;
}

// ---- macroscopic -----------------------------------------------------------

MacroStats macro_stats(const TailGrid& grid) {
  const Eigen::Index m = static_cast<Eigen::Index>(grid.m);
  MacroStats s;
  s.truncated_mass = grid.v[m - 1];
  if (s.truncated_mass > 1e-3) {
    throw std::runtime_error("macro_stats: more than 1e-3 of the mass at the far boundary; enlarge x_max");
  }
  double first = 0.0;
  double xv = 0.0;
  for (Eigen::Index j = 0; j <= m; ++j) {
    const double w = (j == 0 || j == m) ? 0.5 : 1.0;
    const double x = grid.x(static_cast<std::size_t>(j));
    first += w * grid.v[j];
    xv += w * x * grid.v[j];
  }
  s.m_mac = first * grid.dx;
  s.second = 2.0 * xv * grid.dx;
  s.sigma_mac = std::sqrt(std::max(0.0, s.second - s.m_mac * s.m_mac));
  return s;
}

MacroStats stationary_macro_stats(const StationaryProfile& st) {
  const auto& c = st.coeffs;
  // v <= (1 - alpha)^{-1/(ell-1)} e^{-c1 x / a}
  const double prefactor = std::pow(1.0 - st.alpha, -1.0 / (c.ell - 1));
  const double x_hi = c.a / c.c1 * (std::log(prefactor) + std::log(1e16)) + 1.0;
  const std::size_t cells = 200000;
  const double h = x_hi / static_cast<double>(cells);
  double first = 0.0;
  double xv = 0.0;
  for (std::size_t j = 0; j <= cells; ++j) {
    const double w = (j == 0 || j == cells) ? 1.0 : (j % 2 == 1 ? 4.0 : 2.0);
    const double x = static_cast<double>(j) * h;
    const double v = st.v(x);
    first += w * v;
    xv += w * x * v;
  }
  MacroStats s;
  s.m_mac = first * h / 3.0;
  s.second = 2.0 * xv * h / 3.0;
  s.sigma_mac = std::sqrt(std::max(0.0, s.second - s.m_mac * s.m_mac));
  s.truncated_mass = st.v(x_hi);
  return s;
}

// ---- history and weak form -------------------------------------------------

void TailHistory::push(const TailGrid& grid) {
  if (times.empty()) {
    x_max = grid.x_max;
    m = grid.m;
    dx = grid.dx;
    coeffs = grid.coeffs;
  } else if (grid.m != m || grid.x_max != x_max) {
    throw std::invalid_argument("TailHistory: grid mismatch");
  } else if (grid.t < times.back()) {
    throw std::invalid_argument("TailHistory: times must be nondecreasing");
  }
  times.push_back(grid.t);
  v.push_back(grid.v);
}

double TailHistory::value(double x, double t) const {
  if (times.empty()) throw std::logic_error("TailHistory: empty");
  if (x < 0.0) return 1.0;
  if (x >= x_max) return 0.0;
  const double s = x / dx;
  const auto j = static_cast<Eigen::Index>(std::min(static_cast<std::size_t>(s), m - 1));
  const double wx = s - static_cast<double>(j);
  auto at = [&](std::size_t k) { return (1.0 - wx) * v[k][j] + wx * v[k][j + 1]; };
  if (t <= times.front()) return at(0);
  if (t >= times.back()) return at(times.size() - 1);
  const auto it = std::upper_bound(times.begin(), times.end(), t);
  const auto k = static_cast<std::size_t>(it - times.begin());
  const double span = times[k] - times[k - 1];
  const double wt = span > 0.0 ? (t - times[k - 1]) / span : 1.0;
  return (1.0 - wt) * at(k - 1) + wt * at(k);
}

TailGrid TailHistory::at(std::size_t k) const {
  TailGrid g;
  g.x_max = x_max;
  g.m = m;
  g.dx = dx;
  g.coeffs = coeffs;
  g.t = times.at(k);
  g.v = v.at(k);
  return g;
}

TailHistory evolve_with_history(const TailGrid& initial, double t_end, const EvolveOptions& options,
                                EvolveDiagnostics* diag) {
  TailHistory h;
  h.push(initial);
  EvolveOptions opts = options;
  opts.observer = [&h, &options](const TailGrid& g) {
    h.push(g);
    if (options.observer) options.observer(g);
  };
  evolve(initial, t_end, opts, diag);
  return h;
}

TestFunction TestFunction::polynomial_bump(double support) {
  const double L = support;
  TestFunction f;
  f.phi = [L](double x) {
    if (x < 0.0 || x >= L) return 0.0;
    const double s = 1.0 - x / L;
    return x * s * s * s * s;
  };
  f.dphi = [L](double x) {
    if (x < 0.0 || x >= L) return 0.0;
    const double s = 1.0 - x / L;
    return s * s * s * s - 4.0 * x / L * s * s * s;
  };
  f.d2phi = [L](double x) {
    if (x < 0.0 || x >= L) return 0.0;
    const double s = 1.0 - x / L;
    return -8.0 / L * s * s * s + 12.0 * x / (L * L) * s * s;
  };
  return f;
}

TestFunction TestFunction::zero() {
  auto z = [](double) { return 0.0; };
  return {z, z, z};
}

double weak_residual(const TailHistory& h, const TestFunction& test) {
  if (h.times.empty()) throw std::invalid_argument("weak_residual: empty history");
  const std::size_t m = h.m;
  Eigen::VectorXd w(static_cast<Eigen::Index>(m + 1));
  if (m % 2 == 0) {
    for (std::size_t j = 0; j <= m; ++j) {
      w[static_cast<Eigen::Index>(j)] = (j == 0 || j == m) ? 1.0 : (j % 2 == 1 ? 4.0 : 2.0);
    }
    w *= h.dx / 3.0;
  } else {
    w.setConstant(h.dx);
    w[0] = w[static_cast<Eigen::Index>(m)] = 0.5 * h.dx;
  }
  Eigen::VectorXd phi(w.size()), dphi(w.size()), d2phi(w.size());
  for (std::size_t j = 0; j <= m; ++j) {
    const double x = static_cast<double>(j) * h.dx;
    const auto k = static_cast<Eigen::Index>(j);
    phi[k] = w[k] * test.phi(x);
    dphi[k] = w[k] * test.dphi(x);
    d2phi[k] = w[k] * test.d2phi(x);
  }
  const PdeCoeffs& c = h.coeffs;
  auto integrand = [&](const Eigen::VectorXd& v) {
    const Eigen::VectorXd f = v.unaryExpr([&c](double z) { return c.flux(z); });
    return -f.dot(dphi) + c.a * v.dot(d2phi);
  };
  const double lhs = h.v.back().dot(phi) - h.v.front().dot(phi);
  double rhs = 0.0;
  double prev = integrand(h.v.front());
  for (std::size_t k = 1; k < h.times.size(); ++k) {
    const double cur = integrand(h.v[k]);
    rhs += 0.5 * (prev + cur) * (h.times[k] - h.times[k - 1]);
    prev = cur;
  }
  rhs += c.a * test.dphi(0.0) * (h.times.back() - h.times.front());
  return std::abs(lhs - rhs);
}

}  // namespace hydrobalance
