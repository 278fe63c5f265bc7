#pragma once

#include <cstddef>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "nsbound/errors.hpp"

namespace nsbound {

struct ConstantTable;

/// Piecewise-linear sampler of a nonnegative function of time, clamped to
/// its end values outside the sampled range. A single sample is a constant.
class TimeSeries {
 public:
  TimeSeries() : t_{0.0}, v_{0.0} {}
  TimeSeries(std::vector<double> times, std::vector<double> values);
  static TimeSeries constant(double value) { return TimeSeries({0.0}, {value}); }

  double operator()(double t) const;
  const std::vector<double>& times() const { return t_; }
  const std::vector<double>& values() const { return v_; }
  bool is_constant() const { return t_.size() == 1; }
  bool is_zero() const;

 private:
  std::vector<double> t_;
  std::vector<double> v_;
};

/// Estimators of one Sobolev order q.
struct OrderEstimators {
  TimeSeries eps;     ///< differential error estimator epsilon_q(t)
  double delta = 0.0; ///< datum error estimator delta_q
  TimeSeries growth;  ///< growth estimator D_q(t)
};

/// Differential, datum and growth estimators for every order needed by a
/// bound of base order n and higher orders `orders`: the set must cover n,
/// n + 1 and each p, p + 1.
struct EstimatorSet {
  double n = 3.0;
  std::vector<double> orders;
  double T_a = std::numeric_limits<double>::infinity();
  std::map<double, OrderEstimators> by_order;

  const OrderEstimators& at(double q) const;
  bool has(double q) const;
  /// Sample times of every non-constant series, sorted and unique.
  std::vector<double> breakpoints() const;
  /// Throws ConfigError on a missing growth partner or a negative value.
  void validate() const;
};

/// Orders an EstimatorSet must provide for base order n and bound orders P.
std::vector<double> required_estimator_orders(double n, const std::vector<double>& orders);

/// The accepted integrator states of the order-n equality solution, with
/// cubic Hermite interpolation between them.
struct RiccatiCurve {
  std::vector<double> t;
  std::vector<double> r;
  std::vector<double> dr;
  double operator()(double s) const;
};

/// Bound of order p: samples of A_p and R_p on the solution grid.
struct OrderBound {
  double p = 0.0;
  double K_p = 0.0;
  double G_p = 0.0;
  double G_pn = 0.0;
  std::vector<double> A;
  std::vector<double> R;
};

/// Output of the control solver.
struct ControlSolution {
  double nu = 0.0;
  double K_n = 0.0;
  double G_n = 0.0;
  double horizon = 0.0;  ///< min(T_a, T_max), the integration target
  double T_c = 0.0;      ///< certified horizon; equals `horizon` unless blew_up
  bool blew_up = false;
  std::string stop_reason;  ///< "horizon", "value_cap" or "step_collapse"
  double rtol = 0.0;
  double atol = 0.0;
  std::vector<double> t;   ///< output grid, all points < T_c (or <= horizon)
  std::vector<double> R_n;
  RiccatiCurve curve;
  std::vector<OrderBound> orders;
};

struct RiccatiOptions {
  double rtol = 1e-10;
  double atol = 1e-14;
  double value_cap = 1e12;
  double step_collapse_rel = 1e-14;  ///< relative to the horizon
  /// Bound on h |dF/dR| per step; keeps the Hermite interpolant of R_n
  /// accurate enough for the order-p quadratures.
  double max_linear_growth = 0.01;
};

/// Output grid policy: explicit times when given, else `samples` uniform
/// points on [0, horizon].
struct GridPolicy {
  std::size_t samples = 101;
  std::vector<double> times;
};

double e_nu(double nu, double t);

/// Closed-form horizon for the zero approximant with zero forcing.
double zero_tc(double nu, double G_n, double u0n);
double zero_rn(double nu, double G_n, double u0n, double t);
double zero_rp(double nu, double G_n, double G_pn, double u0n, double u0p, double t);

/// Solves dR/dt = -nu R + (G_n D_n + K_n D_{n+1}) R + G_n R^2 + eps_n,
/// R(0) = delta_n as an equality with adaptive Dormand-Prince 5(4).
/// Blow-up is declared when R exceeds the value cap or the step collapses;
/// T_c is then the last accepted time below the cap.
ControlSolution solve_riccati_control(const EstimatorSet& est, double K_n, double G_n, double nu,
                                      double T_max, const GridPolicy& grid = {},
                                      const RiccatiOptions& opts = {});

struct QuadratureOptions {
  double rtol = 1e-10;
  unsigned max_depth = 15;
};

/// R_p(t) = exp(-nu t + A_p(t)) (delta_p + int_0^t exp(nu s - A_p(s)) eps_p(s) ds),
/// A_p(t) = int_0^t (G_p D_p + K_p D_{p+1} + G_pn R_n), by adaptive
/// Gauss-Kronrod over the segments between integrator nodes and estimator
/// breakpoints. Sampled on sol.t.
OrderBound solve_linear_control(const EstimatorSet& est, const ControlSolution& sol, double p,
                                double K_p, double G_p, double G_pn,
                                const QuadratureOptions& opts = {});

/// Riccati solve plus solve_linear_control for every order in est.orders
/// (independent orders run in parallel), constants taken from `table`.
ControlSolution solve_control_system(const EstimatorSet& est, const ConstantTable& table, double nu,
                                     double T_max, const GridPolicy& grid = {},
                                     const RiccatiOptions& opts = {});

}  // namespace nsbound
