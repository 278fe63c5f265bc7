#include <doctest.h>
#include <omp.h>

#include <boost/numeric/odeint.hpp>
#include <cmath>
#include <limits>

#include "nsbound/approximants.hpp"
#include "nsbound/control_solver.hpp"
#include "nsbound/tame_constants.hpp"
#include "support.hpp"

using namespace nsbound;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

/// Estimators for base order n and bound orders P with the same estimator
/// family at every order, scaled by (1 + q / 10) so orders differ.
EstimatorSet make_set(double n, std::vector<double> orders, const TimeSeries& eps, double delta,
                      const TimeSeries& growth, double T_a = kInf) {
  EstimatorSet s;
  s.n = n;
  s.orders = orders;
  s.T_a = T_a;
  for (double q : required_estimator_orders(n, orders)) s.by_order[q] = OrderEstimators{eps, delta, growth};
  return s;
}

/// Sampled smooth function on [0, T].
TimeSeries sampled(double T, std::size_t samples, const std::function<double(double)>& f) {
  std::vector<double> t, v;
  for (std::size_t i = 0; i < samples; ++i) {
    t.push_back(T * static_cast<double>(i) / static_cast<double>(samples - 1));
    v.push_back(f(t.back()));
  }
  return TimeSeries(t, v);
}

GridPolicy uniform_policy(double T, std::size_t samples) {
  GridPolicy g;
  g.times = uniform_times(T, samples);
  return g;
}

}  // namespace

TEST_CASE("closed forms") {
  SUBCASE("e_nu") {
    CHECK(e_nu(0.0, 3.5) == 3.5);
    CHECK(e_nu(2.0, 0.0) == 0.0);
    CHECK(e_nu(1.0, 1.0) == doctest::Approx(1.0 - std::exp(-1.0)).epsilon(1e-15));
    CHECK(e_nu(1e-12, 2.0) == doctest::Approx(2.0).epsilon(1e-11));
    for (double x : {1e-9, 1e-8, 1.1e-8, 1e-6}) {
      const double t = 1.0;
      CHECK(e_nu(x, t) == doctest::Approx(t * (1.0 - x * t / 2.0 + x * x * t * t / 6.0)).epsilon(1e-15));
    }
    CHECK_THROWS_AS(e_nu(-1.0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(e_nu(1.0, -1.0), std::invalid_argument);
  }
  SUBCASE("zero_tc") {
    CHECK(zero_tc(1.0, 2.0, 0.0) == kInf);
    CHECK(zero_tc(0.0, 2.0, 0.0) == kInf);
    CHECK(zero_tc(0.5, 2.0, 0.25) == kInf);
    CHECK(zero_tc(0.5, 2.0, 0.2) == kInf);
    CHECK(zero_tc(0.0, 2.0, 0.25) == doctest::Approx(2.0).epsilon(1e-15));
    CHECK(zero_tc(1.0, 1.0, 2.0) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
    CHECK_THROWS_AS(zero_tc(1.0, 0.0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(zero_tc(1.0, -1.0, 1.0), std::invalid_argument);
  }
  SUBCASE("zero_rn") {
    CHECK(zero_rn(1.0, 2.0, 0.0, 5.0) == 0.0);
    CHECK(zero_rn(1.0, 2.0, 0.7, 0.0) == 0.7);
    CHECK(zero_rn(0.0, 1.0, 1.0, 0.5) == doctest::Approx(2.0).epsilon(1e-15));
    CHECK_THROWS_AS(zero_rn(0.0, 1.0, 1.0, 1.0), std::domain_error);
  }
  SUBCASE("zero_rp") {
    for (double t : {0.0, 0.1, 0.3})
      CHECK(zero_rp(0.5, 1.0, 1.0, 1.0, 1.0, t) == doctest::Approx(zero_rn(0.5, 1.0, 1.0, t)).epsilon(1e-15));
    CHECK(zero_rp(0.5, 1.0, 2.0, 1.0, 0.0, 0.2) == 0.0);
    CHECK(zero_rp(0.0, 1.0, 2.0, 1.0, 3.0, 0.5) == doctest::Approx(12.0).epsilon(1e-14));
    CHECK_THROWS_AS(zero_rp(0.0, 1.0, 0.5, 1.0, 3.0, 0.5), std::invalid_argument);
    CHECK_THROWS_AS(zero_rp(0.0, 1.0, 2.0, 1.0, 3.0, 1.0), std::domain_error);
  }
}

TEST_CASE("time series") {
  const TimeSeries s({0.0, 1.0, 3.0}, {1.0, 3.0, 2.0});
  CHECK(s(-1.0) == 1.0);
  CHECK(s(0.5) == doctest::Approx(2.0));
  CHECK(s(2.0) == doctest::Approx(2.5));
  CHECK(s(10.0) == 2.0);
  CHECK(!s.is_constant());
  CHECK(TimeSeries::constant(4.0)(123.0) == 4.0);
  CHECK(TimeSeries::constant(0.0).is_zero());
  CHECK(TimeSeries().is_zero());
  CHECK_THROWS_AS(TimeSeries({0.0, 0.0}, {1.0, 1.0}), std::invalid_argument);
  CHECK_THROWS_AS(TimeSeries({0.0, 1.0}, {1.0}), std::invalid_argument);
}

TEST_CASE("estimator sets") {
  auto s = make_set(3.0, {4.0}, TimeSeries::constant(0.0), 0.0, TimeSeries::constant(0.0));
  CHECK(required_estimator_orders(3.0, {4.0, 5.0}) == std::vector<double>{3.0, 4.0, 5.0, 6.0});
  CHECK_NOTHROW(s.validate());
  s.by_order.erase(5.0);
  CHECK_THROWS_AS(s.validate(), ConfigError);
  auto neg = make_set(3.0, {}, TimeSeries({0.0, 1.0}, {0.0, -1.0}), 0.0, TimeSeries::constant(0.0));
  CHECK_THROWS_AS(neg.validate(), ConfigError);
  auto bp = make_set(3.0, {}, TimeSeries({0.0, 0.5, 1.0}, {0.0, 1.0, 0.0}), 0.0,
                     TimeSeries({0.0, 0.25}, {1.0, 1.0}));
  CHECK(bp.breakpoints() == std::vector<double>{0.0, 0.25, 0.5, 1.0});
}

TEST_CASE("Riccati control") {
  SUBCASE("zero estimators give the zero solution") {
    const auto s = make_set(3.0, {4.0}, TimeSeries::constant(0.0), 0.0, TimeSeries::constant(0.0), 2.5);
    const auto sol = solve_riccati_control(s, 0.3, 0.4, 0.1, 10.0);
    CHECK(sol.T_c == 2.5);
    CHECK(!sol.blew_up);
    CHECK(sol.stop_reason == "horizon");
    for (double r : sol.R_n) CHECK(r == 0.0);
    const auto b = solve_linear_control(s, sol, 4.0, 0.5, 0.6, 0.9);
    for (double r : b.R) CHECK(r == 0.0);
    CHECK(solve_riccati_control(s, 0.3, 0.4, 0.1, 1.5).T_c == 1.5);
  }

  SUBCASE("zero approximant reproduces the closed forms") {
    for (const auto& [nu, G, u0n] : {std::tuple{1.0, 0.39, 2.0 / 0.39}, std::tuple{0.0, 0.39, 1.3},
                                     std::tuple{0.5, 1.0, 0.75}}) {
      const double tc = zero_tc(nu, G, u0n);
      REQUIRE(std::isfinite(tc));
      const double u0p = 1.7 * u0n;
      const double Gpn = 2.2 * G;
      auto s = make_set(3.0, {4.0}, TimeSeries::constant(0.0), u0n, TimeSeries::constant(0.0));
      s.by_order[4.0].delta = u0p;
      const auto sol = solve_riccati_control(s, 0.33, G, nu, 10.0, uniform_policy(0.95 * tc, 96));
      CHECK(sol.blew_up);
      CHECK(testing::rel_diff(sol.T_c, tc) <= 1e-8);
      REQUIRE(sol.t.size() == 96);
      double worst = 0.0;
      for (std::size_t i = 0; i < sol.t.size(); ++i)
        worst = std::max(worst, testing::rel_diff(sol.R_n[i], zero_rn(nu, G, u0n, sol.t[i])));
      CHECK(worst <= 1e-8);
      const auto b = solve_linear_control(s, sol, 4.0, 0.5, G, Gpn);
      double worst_p = 0.0;
      for (std::size_t i = 0; i < sol.t.size(); ++i)
        worst_p = std::max(worst_p, testing::rel_diff(b.R[i], zero_rp(nu, G, Gpn, u0n, u0p, sol.t[i])));
      CHECK(worst_p <= 1e-8);
      CHECK(sol.R_n.front() == u0n);
      CHECK(b.R.front() == u0p);
    }
  }

  SUBCASE("linear limit against the analytic solution") {
    const double nu = 0.3, a = 1.1, c = 0.25, G = 1e-12;
    const auto s = make_set(3.0, {}, TimeSeries::constant(c), 0.0, TimeSeries::constant(0.0));
    auto s2 = s;
    s2.by_order[3.0].growth = TimeSeries::constant(a / G);
    const auto sol = solve_riccati_control(s2, 0.0, G, nu, 2.0);
    double scale = 0.0, worst = 0.0;
    for (std::size_t i = 0; i < sol.t.size(); ++i) {
      const double want = c * std::expm1((a - nu) * sol.t[i]) / (a - nu);
      scale = std::max(scale, want);
      worst = std::max(worst, std::abs(sol.R_n[i] - want));
    }
    CHECK(worst <= 1e-10 * scale);
  }

  SUBCASE("monotone dependence on the estimators") {
    const double T = 1.0;
    const auto eps_lo = sampled(T, 21, [](double t) { return 0.1 + 0.05 * std::sin(3 * t); });
    const auto eps_hi = sampled(T, 21, [](double t) { return 0.12 + 0.05 * std::sin(3 * t); });
    const auto d_lo = sampled(T, 11, [](double t) { return 1.0 + t; });
    const auto d_hi = sampled(T, 11, [](double t) { return 1.1 + t; });
    const auto base = solve_riccati_control(make_set(3.0, {}, eps_lo, 0.2, d_lo, T), 0.3, 0.4, 0.5, T);
    for (const auto& s : {make_set(3.0, {}, eps_hi, 0.2, d_lo, T), make_set(3.0, {}, eps_lo, 0.25, d_lo, T),
                          make_set(3.0, {}, eps_lo, 0.2, d_hi, T)}) {
      const auto up = solve_riccati_control(s, 0.3, 0.4, 0.5, T);
      REQUIRE(up.R_n.size() == base.R_n.size());
      for (std::size_t i = 0; i < base.R_n.size(); ++i) CHECK(up.R_n[i] >= base.R_n[i]);
    }
  }

  SUBCASE("viscous decay of small data") {
    const double nu = 1.0, G = 0.4, delta = 2.0;
    const auto sol = solve_riccati_control(
        make_set(3.0, {}, TimeSeries::constant(0.0), delta, TimeSeries::constant(0.0)), 0.3, G, nu, 5.0);
    CHECK(!sol.blew_up);
    for (std::size_t i = 1; i < sol.R_n.size(); ++i) {
      CHECK(sol.R_n[i] <= sol.R_n[i - 1]);
      CHECK(sol.R_n[i] <= delta * std::exp(-(nu - G * delta) * sol.t[i]) * (1.0 + 1e-12));
    }
  }

  SUBCASE("tolerance refinement moves T_c by < 0.1%") {
    const auto eps = sampled(3.0, 31, [](double t) { return 0.5 + 0.2 * std::cos(t); });
    const auto grow = sampled(3.0, 31, [](double t) { return 2.0 + t; });
    const auto s = make_set(3.0, {}, eps, 0.5, grow, 3.0);
    const auto coarse = solve_riccati_control(s, 0.3, 0.4, 0.1, 3.0);
    RiccatiOptions fine;
    fine.rtol = 0.5e-10;
    fine.atol = 0.5e-14;
    const auto refined = solve_riccati_control(s, 0.3, 0.4, 0.1, 3.0, {}, fine);
    REQUIRE(coarse.blew_up);
    REQUIRE(refined.blew_up);
    MESSAGE("T_c " << coarse.T_c << " -> " << refined.T_c);
    CHECK(testing::rel_diff(coarse.T_c, refined.T_c) < 1e-3);
  }

  SUBCASE("initial values are the datum estimators") {
    auto s = make_set(3.0, {4.0, 5.0}, sampled(1.0, 5, [](double t) { return t; }), 0.125,
                      TimeSeries::constant(0.5), 1.0);
    s.by_order[4.0].delta = 0.375;
    const auto sol = solve_riccati_control(s, 0.3, 0.4, 0.1, 1.0);
    CHECK(sol.R_n.front() == 0.125);
    CHECK(solve_linear_control(s, sol, 4.0, 0.5, 0.6, 0.9).R.front() == 0.375);
    CHECK(solve_linear_control(s, sol, 5.0, 0.5, 0.6, 0.9).R.front() == 0.125);
    for (double r : sol.R_n) CHECK(r >= 0.0);
  }

  SUBCASE("argument checks") {
    const auto s = make_set(3.0, {}, TimeSeries::constant(0.0), 0.0, TimeSeries::constant(0.0));
    CHECK_THROWS_AS(solve_riccati_control(s, 0.3, 0.4, -1.0, 1.0), ConfigError);
    CHECK_THROWS_AS(solve_riccati_control(s, 0.3, -0.4, 1.0, 1.0), ConfigError);
    CHECK_THROWS_AS(solve_riccati_control(s, 0.3, 0.4, 1.0, kInf), ConfigError);
    auto missing = s;
    missing.by_order.erase(4.0);
    CHECK_THROWS_AS(solve_riccati_control(missing, 0.3, 0.4, 1.0, 1.0), ConfigError);
  }
}

TEST_CASE("order-p quadrature against an independent ODE integration") {
  namespace odeint = boost::numeric::odeint;
  const double T = 1.5, nu = 0.2, Kn = 0.33, Gn = 0.39, Kp = 0.56, Gp = 0.5, Gpn = 0.89;
  EstimatorSet s;
  s.n = 3.0;
  s.orders = {4.0};
  s.T_a = T;
  const auto eps = [](double q) {
    return sampled(1.5, 61, [q](double t) { return 0.02 * q * (1.0 + std::sin(2.0 * t) * std::sin(2.0 * t)); });
  };
  const auto grow = [](double q) { return sampled(1.5, 61, [q](double t) { return 0.3 * q / (1.0 + t); }); };
  for (double q : {3.0, 4.0, 5.0}) s.by_order[q] = OrderEstimators{eps(q), 0.01 * q, grow(q)};

  const auto sol = solve_riccati_control(s, Kn, Gn, nu, T, uniform_policy(T, 31));
  REQUIRE(!sol.blew_up);
  const auto b = solve_linear_control(s, sol, 4.0, Kp, Gp, Gpn);

  using State = std::array<double, 2>;
  const auto& en = s.at(3.0);
  const auto& ep = s.at(4.0);
  const auto& dn1 = s.at(4.0).growth;
  const auto& dp1 = s.at(5.0).growth;
  auto system = [&](const State& y, State& dy, double t) {
    dy[0] = -nu * y[0] + (Gn * en.growth(t) + Kn * dn1(t)) * y[0] + Gn * y[0] * y[0] + en.eps(t);
    dy[1] = (-nu + Gp * ep.growth(t) + Kp * dp1(t) + Gpn * y[0]) * y[1] + ep.eps(t);
  };
  State y{en.delta, ep.delta};
  auto stepper = odeint::make_controlled(1e-13, 1e-13, odeint::runge_kutta_dopri5<State>());
  double worst_n = 0.0, worst_p = 0.0;
  for (std::size_t i = 1; i < sol.t.size(); ++i) {
    // Integrate segment by segment between the sample knots so the kinks of
    // the interpolated estimators never fall inside a step.
    const double t0 = sol.t[i - 1], t1 = sol.t[i];
    std::vector<double> knots{t0};
    for (double k : s.breakpoints())
      if (k > t0 && k < t1) knots.push_back(k);
    knots.push_back(t1);
    for (std::size_t j = 1; j < knots.size(); ++j)
      odeint::integrate_adaptive(stepper, system, y, knots[j - 1], knots[j], 1e-3);
    worst_n = std::max(worst_n, testing::rel_diff(sol.R_n[i], y[0]));
    worst_p = std::max(worst_p, testing::rel_diff(b.R[i], y[1]));
  }
  MESSAGE("odeint oracle: worst relative deviation R_n " << worst_n << ", R_p " << worst_p);
  CHECK(worst_n <= 1e-8);
  CHECK(worst_p <= 1e-8);
}

TEST_CASE("control system is independent of the thread count") {
  ConstantTable table;
  table.dim = 3;
  for (const auto& [p, n, K, G] : {std::tuple{3.0, 3.0, 0.33, 0.39}, std::tuple{4.0, 4.0, 0.46, 0.5},
                                   std::tuple{5.0, 5.0, 0.69, 0.79}, std::tuple{4.0, 3.0, 0.56, 0.89},
                                   std::tuple{5.0, 3.0, 0.95, 1.2}}) {
    ConstantEntry e;
    e.p = p;
    e.n = n;
    e.K = K;
    e.G = G;
    table.entries.push_back(e);
  }
  const auto s = make_set(3.0, {4.0, 5.0}, sampled(1.0, 11, [](double t) { return 0.01 * (1 + t); }), 0.05,
                          sampled(1.0, 11, [](double t) { return 1.0 - 0.5 * t; }), 1.0);
  const int saved = omp_get_max_threads();
  omp_set_num_threads(1);
  const auto one = solve_control_system(s, table, 0.1, 1.0);
  omp_set_num_threads(4);
  const auto four = solve_control_system(s, table, 0.1, 1.0);
  omp_set_num_threads(saved);
  CHECK(one.R_n == four.R_n);
  REQUIRE(one.orders.size() == 2);
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(one.orders[i].R == four.orders[i].R);
    CHECK(one.orders[i].A == four.orders[i].A);
    const auto serial = solve_linear_control(s, one, s.orders[i], table.K(s.orders[i], s.orders[i]),
                                             table.G(s.orders[i], s.orders[i]), table.G(s.orders[i], 3.0));
    CHECK(serial.R == one.orders[i].R);
  }
}
