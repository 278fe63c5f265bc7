#include "nsbound/control_solver.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <exception>
#include <stdexcept>

#include "nsbound/ode.hpp"
#include "nsbound/tame_constants.hpp"

namespace nsbound {

namespace {

constexpr double kOrderTol = 1e-12;

std::string fmt(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%g", x);
  return buf;
}

std::vector<double> uniform_grid(double horizon, std::size_t samples) {
  const std::size_t m = std::max<std::size_t>(samples, 2);
  std::vector<double> t(m);
  for (std::size_t i = 0; i < m; ++i) t[i] = horizon * static_cast<double>(i) / static_cast<double>(m - 1);
  t.back() = horizon;
  return t;
}

double gk_integrate(const std::function<double(double)>& f, double a, double b,
                    const QuadratureOptions& opts) {
  if (b <= a) return 0.0;
  double err = 0.0;
  double l1 = 0.0;
  // Integrate over the unit interval: the installed Boost compares an
  // unscaled local error against a scaled tolerance, which misbehaves on
  // short intervals.
  const double w = b - a;
  const auto unit = [&](double x) { return f(a + w * x); };
  const double val = w * boost::math::quadrature::gauss_kronrod<double, 15>::integrate(
                             unit, 0.0, 1.0, opts.max_depth, opts.rtol, &err, &l1);
  if (!std::isfinite(val) || err > std::max(10.0 * opts.rtol * l1, 1e-300)) {
    throw IntegratorFailure("Gauss-Kronrod quadrature did not converge on [" + fmt(a) + ", " +
                            fmt(b) + "] (error estimate " + fmt(err) + ")");
  }
  return val;
}

}  // namespace

TimeSeries::TimeSeries(std::vector<double> times, std::vector<double> values)
    : t_(std::move(times)), v_(std::move(values)) {
  if (t_.empty() || t_.size() != v_.size()) {
    throw std::invalid_argument("TimeSeries: times and values must be nonempty and of equal length");
  }
  for (std::size_t i = 1; i < t_.size(); ++i) {
    if (!(t_[i] > t_[i - 1])) throw std::invalid_argument("TimeSeries: times must be strictly increasing");
  }
}

double TimeSeries::operator()(double t) const {
  if (t_.size() == 1 || t <= t_.front()) return v_.front();
  if (t >= t_.back()) return v_.back();
  const auto it = std::upper_bound(t_.begin(), t_.end(), t);
  const auto i = static_cast<std::size_t>(it - t_.begin());
  const double w = (t - t_[i - 1]) / (t_[i] - t_[i - 1]);
  return (1.0 - w) * v_[i - 1] + w * v_[i];
}

bool TimeSeries::is_zero() const {
  return std::all_of(v_.begin(), v_.end(), [](double x) { return x == 0.0; });
}

const OrderEstimators& EstimatorSet::at(double q) const {
  for (const auto& [order, e] : by_order)
    if (std::abs(order - q) <= kOrderTol) return e;
  throw ConfigError("estimator set has no entry for order " + fmt(q));
}

bool EstimatorSet::has(double q) const {
  for (const auto& [order, e] : by_order)
    if (std::abs(order - q) <= kOrderTol) return true;
  return false;
}

std::vector<double> EstimatorSet::breakpoints() const {
  std::vector<double> out;
  for (const auto& [order, e] : by_order) {
    if (!e.eps.is_constant()) out.insert(out.end(), e.eps.times().begin(), e.eps.times().end());
    if (!e.growth.is_constant()) out.insert(out.end(), e.growth.times().begin(), e.growth.times().end());
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

void EstimatorSet::validate() const {
  for (double q : required_estimator_orders(n, orders)) {
    if (!has(q)) {
      throw ConfigError("estimator set lacks order " + fmt(q) +
                        " (every bound order q needs estimators of orders q and q + 1)");
    }
  }
  for (const auto& [order, e] : by_order) {
    const auto neg = [](const TimeSeries& s) {
      return std::any_of(s.values().begin(), s.values().end(), [](double x) { return !(x >= 0.0); });
    };
    if (neg(e.eps) || neg(e.growth) || !(e.delta >= 0.0)) {
      throw ConfigError("estimators of order " + fmt(order) + " must be nonnegative and finite");
    }
  }
}

std::vector<double> required_estimator_orders(double n, const std::vector<double>& orders) {
  std::vector<double> out{n, n + 1.0};
  for (double p : orders) {
    out.push_back(p);
    out.push_back(p + 1.0);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end(),
                        [](double a, double b) { return std::abs(a - b) <= kOrderTol; }),
            out.end());
  return out;
}

double RiccatiCurve::operator()(double s) const {
  if (t.empty()) return 0.0;
  if (s <= t.front()) return r.front();
  if (s >= t.back()) return r.back();
  const auto it = std::upper_bound(t.begin(), t.end(), s);
  const auto i = static_cast<std::size_t>(it - t.begin()) - 1;
  const double h = t[i + 1] - t[i];
  const double x = (s - t[i]) / h;
  const double x2 = x * x;
  const double x3 = x2 * x;
  return (2 * x3 - 3 * x2 + 1) * r[i] + (x3 - 2 * x2 + x) * h * dr[i] + (-2 * x3 + 3 * x2) * r[i + 1] +
         (x3 - x2) * h * dr[i + 1];
}

double e_nu(double nu, double t) {
  if (!(nu >= 0.0) || !(t >= 0.0)) throw std::invalid_argument("e_nu: nu and t must be nonnegative");
  const double x = nu * t;
  if (x < 1e-8) return t * (1.0 - 0.5 * x + x * x / 6.0);
  return -std::expm1(-x) / nu;
}

double zero_tc(double nu, double G_n, double u0n) {
  if (!(G_n > 0.0)) throw std::invalid_argument("zero_tc: G_n must be positive");
  if (!(nu >= 0.0) || !(u0n >= 0.0)) throw std::invalid_argument("zero_tc: nu and ||u0||_n must be nonnegative");
  const double inf = std::numeric_limits<double>::infinity();
  if (nu > 0.0) {
    if (u0n <= nu / G_n) return inf;
    return -std::log1p(-nu / (G_n * u0n)) / nu;
  }
  return u0n == 0.0 ? inf : 1.0 / (G_n * u0n);
}

double zero_rn(double nu, double G_n, double u0n, double t) {
  if (!(t < zero_tc(nu, G_n, u0n))) throw std::domain_error("zero_rn: t is beyond the certified horizon");
  return u0n * std::exp(-nu * t) / (1.0 - G_n * u0n * e_nu(nu, t));
}

double zero_rp(double nu, double G_n, double G_pn, double u0n, double u0p, double t) {
  if (!(G_pn >= G_n)) throw std::invalid_argument("zero_rp: requires G_pn >= G_n");
  if (!(t < zero_tc(nu, G_n, u0n))) throw std::domain_error("zero_rp: t is beyond the certified horizon");
  return u0p * std::exp(-nu * t) / std::pow(1.0 - G_n * u0n * e_nu(nu, t), G_pn / G_n);
}

ControlSolution solve_riccati_control(const EstimatorSet& est, double K_n, double G_n, double nu,
                                      double T_max, const GridPolicy& grid, const RiccatiOptions& opts) {
  est.validate();
  if (!(nu >= 0.0)) throw ConfigError("viscosity must be nonnegative");
  if (!(K_n >= 0.0) || !(G_n >= 0.0)) throw ConfigError("constants must be nonnegative");
  ControlSolution sol;
  sol.nu = nu;
  sol.K_n = K_n;
  sol.G_n = G_n;
  sol.rtol = opts.rtol;
  sol.atol = opts.atol;
  sol.horizon = std::min(est.T_a, T_max);
  if (!(sol.horizon > 0.0) || !std::isfinite(sol.horizon)) {
    throw ConfigError("integration horizon min(T_a, T_max) must be finite and positive");
  }

  const auto& base = est.at(est.n);
  const auto& partner = est.at(est.n + 1.0);
  const TimeSeries& eps = base.eps;
  const TimeSeries& dn = base.growth;
  const TimeSeries& dn1 = partner.growth;

  std::vector<double> out_t;
  if (!grid.times.empty()) {
    for (double s : grid.times)
      if (s >= 0.0 && s <= sol.horizon) out_t.push_back(s);
    std::sort(out_t.begin(), out_t.end());
    out_t.erase(std::unique(out_t.begin(), out_t.end()), out_t.end());
    if (out_t.empty() || out_t.front() != 0.0) out_t.insert(out_t.begin(), 0.0);
  } else {
    out_t = uniform_grid(sol.horizon, grid.samples);
  }
  std::vector<double> stops = out_t;
  for (double b : est.breakpoints())
    if (b > 0.0 && b < sol.horizon) stops.push_back(b);
  std::sort(stops.begin(), stops.end());
  stops.erase(std::unique(stops.begin(), stops.end()), stops.end());

  const OdeRhs rhs = [&](double t, std::span<const double> y, std::span<double> dy) {
    const double R = y[0];
    dy[0] = -nu * R + (G_n * dn(t) + K_n * dn1(t)) * R + G_n * R * R + eps(t);
  };

  std::size_t next_out = 0;
  const OdeObserver observer = [&](double t, std::span<const double> y, std::span<const double> dy) {
    if (!(y[0] <= opts.value_cap)) return false;
    sol.curve.t.push_back(t);
    sol.curve.r.push_back(y[0]);
    sol.curve.dr.push_back(dy[0]);
    while (next_out < out_t.size() && out_t[next_out] <= t) {
      if (out_t[next_out] == t) {
        sol.t.push_back(t);
        sol.R_n.push_back(y[0]);
      }
      ++next_out;
    }
    return true;
  };

  OdeOptions o;
  o.rtol = opts.rtol;
  o.atol = opts.atol;
  o.min_step = opts.step_collapse_rel * sol.horizon;
  o.norm = ErrorNorm::Componentwise;
  o.step_limit = [&](double t, std::span<const double> y, std::span<const double>) {
    const double J = std::abs(-nu + G_n * dn(t) + K_n * dn1(t) + 2.0 * G_n * y[0]);
    return J > 0.0 ? opts.max_linear_growth / J : std::numeric_limits<double>::infinity();
  };

  const OdeResult res = integrate_dopri45(rhs, 0.0, {base.delta}, sol.horizon, stops, observer, o);
  switch (res.status) {
    case OdeStatus::Completed:
      sol.T_c = sol.horizon;
      sol.stop_reason = "horizon";
      break;
    case OdeStatus::StoppedByObserver:
    case OdeStatus::StepCollapse:
      if (sol.curve.t.empty()) {
        throw IntegratorFailure("Riccati control: initial value exceeds the blow-up cap");
      }
      sol.blew_up = true;
      sol.stop_reason = res.status == OdeStatus::StepCollapse ? "step_collapse" : "value_cap";
      sol.T_c = sol.curve.t.back();
      while (!sol.t.empty() && sol.t.back() >= sol.T_c) {
        sol.t.pop_back();
        sol.R_n.pop_back();
      }
      break;
    case OdeStatus::NonFiniteRhs:
      throw IntegratorFailure("Riccati control: non-finite right-hand side (estimator failure?)");
    case OdeStatus::MaxSteps:
      throw IntegratorFailure("Riccati control: step budget exhausted");
  }
  return sol;
}

OrderBound solve_linear_control(const EstimatorSet& est, const ControlSolution& sol, double p,
                                double K_p, double G_p, double G_pn, const QuadratureOptions& opts) {
  if (sol.curve.t.empty()) throw std::invalid_argument("solve_linear_control: empty order-n solution");
  const auto& ep = est.at(p);
  const TimeSeries& dp = ep.growth;
  const TimeSeries& dp1 = est.at(p + 1.0).growth;
  const TimeSeries& eps = ep.eps;
  const double nu = sol.nu;
  for (double s : sol.t) {
    if (s > sol.curve.t.back()) throw std::domain_error("solve_linear_control: grid extends beyond T_c");
  }
  const double t_last = sol.t.empty() ? 0.0 : sol.t.back();

  std::vector<double> nodes;
  for (double s : sol.curve.t)
    if (s <= t_last) nodes.push_back(s);
  for (double b : est.breakpoints())
    if (b > 0.0 && b < t_last) nodes.push_back(b);
  nodes.insert(nodes.end(), sol.t.begin(), sol.t.end());
  std::sort(nodes.begin(), nodes.end());
  nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());

  const auto g = [&](double s) { return G_p * dp(s) + K_p * dp1(s) + G_pn * sol.curve(s); };
  std::vector<double> A(nodes.size(), 0.0);
  for (std::size_t i = 0; i + 1 < nodes.size(); ++i) A[i + 1] = A[i] + gk_integrate(g, nodes[i], nodes[i + 1], opts);

  std::vector<double> I(nodes.size(), 0.0);
  if (!eps.is_zero()) {
    for (std::size_t i = 0; i + 1 < nodes.size(); ++i) {
      const double a = nodes[i];
      const double Ai = A[i];
      const auto integrand = [&](double s) {
        const double As = Ai + gk_integrate(g, a, s, opts);
        return std::exp(nu * s - As) * eps(s);
      };
      I[i + 1] = I[i] + gk_integrate(integrand, a, nodes[i + 1], opts);
    }
  }

  OrderBound b;
  b.p = p;
  b.K_p = K_p;
  b.G_p = G_p;
  b.G_pn = G_pn;
  for (double s : sol.t) {
    const auto i = static_cast<std::size_t>(std::lower_bound(nodes.begin(), nodes.end(), s) - nodes.begin());
    b.A.push_back(A[i]);
    b.R.push_back(std::exp(-nu * s + A[i]) * (ep.delta + I[i]));
  }
  return b;
}

ControlSolution solve_control_system(const EstimatorSet& est, const ConstantTable& table, double nu,
                                     double T_max, const GridPolicy& grid, const RiccatiOptions& opts) {
  const double n = est.n;
  ControlSolution sol = solve_riccati_control(est, table.K_n(n), table.G_n(n), nu, T_max, grid, opts);
  const auto np = static_cast<std::ptrdiff_t>(est.orders.size());
  sol.orders.resize(est.orders.size());
  std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic, 1)
  for (std::ptrdiff_t i = 0; i < np; ++i) {
    try {
      const double p = est.orders[static_cast<std::size_t>(i)];
      sol.orders[static_cast<std::size_t>(i)] =
          solve_linear_control(est, sol, p, table.K(p, p), table.G(p, p), table.G(p, n));
    } catch (...) {
#pragma omp critical(nsbound_control_failure)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  return sol;
}

}  // namespace nsbound
