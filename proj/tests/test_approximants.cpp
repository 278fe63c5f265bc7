#include <doctest.h>

#include <cmath>

#include "nsbound/approximants.hpp"
#include "nsbound/bilinear.hpp"
#include "nsbound/datum.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace nsbound;

namespace {

ProblemSpec spec3(double nu, const SpectralField& u0, std::vector<double> orders = {4.0}) {
  ProblemSpec s;
  s.dim = 3;
  s.nu = nu;
  s.n = 3.0;
  s.orders = std::move(orders);
  s.u0 = u0;
  s.T_max = 1.0;
  return s;
}

/// sum_m t^m e_m.
SpectralField eval_poly(const std::vector<SpectralField>& c, double t, int dim) {
  SpectralField acc(dim);
  for (std::size_t j = c.size(); j-- > 0;) acc = field_axpy(1.0, c[j], field_scale(t, acc));
  return acc;
}

}  // namespace

TEST_CASE("problem spec validation") {
  const auto u0 = taylor_green(1.0);
  CHECK_NOTHROW(spec3(0.1, u0).validate());
  CHECK_THROWS_AS(spec3(-0.1, u0).validate(), ConfigError);
  CHECK_THROWS_AS(spec3(0.1, u0, {2.0}).validate(), ConfigError);
  auto low = spec3(0.1, u0);
  low.n = 2.5;
  CHECK_THROWS_AS(low.validate(), ConfigError);
  auto two = spec3(0.1, u0);
  two.dim = 2;
  two.n = 2.5;
  CHECK_THROWS_AS(two.validate(), ConfigError);
}

TEST_CASE("zero approximant") {
  const auto u0 = testing::random_cube_field(3, 3, 5);
  const auto spec = spec3(0.4, u0, {4.0, 5.0});
  const auto tr = zero_approximant(3, 2.0, uniform_times(2.0, 11));
  CHECK(tr.provenance == Provenance::Zero);
  CHECK(tr.T_a == 2.0);
  for (std::size_t i = 0; i < tr.t.size(); ++i) {
    CHECK(tr.ua[i].empty());
    CHECK(sobolev_norm(differential_error(tr.ua[i], tr.dua[i], tr.t[i], spec), 0.0) == 0.0);
  }
  const auto est = tautological_estimators(tr, spec);
  for (double q : {3.0, 4.0, 5.0, 6.0}) {
    CHECK(est.at(q).eps.is_zero());
    CHECK(est.at(q).growth.is_zero());
    CHECK(est.at(q).delta == doctest::Approx(sobolev_norm(u0, q)).epsilon(1e-15));
  }
  CHECK(uniform_times(1.0, 5) == std::vector<double>{0.0, 0.25, 0.5, 0.75, 1.0});
  CHECK_THROWS_AS(uniform_times(0.0, 5), ConfigError);
}

TEST_CASE("differential error") {
  const auto u0 = testing::random_cube_field(3, 3, 9);
  SUBCASE("frozen approximant") {
    const double nu = 0.7;
    const auto spec = spec3(nu, u0);
    const auto e = differential_error(u0, SpectralField(3), 0.3, spec);
    const auto want = field_axpy(-nu, laplacian(u0), field_scale(-1.0, bilinear_p(u0, u0)));
    CHECK(max_abs_difference(e, want) <= 1e-14 * want.max_abs_coeff());
    // The oracle convolution gives the same thing.
    const auto Pfull = oracle::bilinear(u0, u0);
    const auto lap = laplacian(u0);
    CHECK(oracle::l2_distance(Pfull, field_scale(-1.0, field_axpy(nu, lap, e))) <=
          1e-12 * std::sqrt(oracle::l2sq(Pfull)));
  }
  SUBCASE("forcing enters with a minus sign") {
    auto spec = spec3(0.0, SpectralField(3));
    spec.forcing.taylor = {u0, field_scale(2.0, u0)};
    const auto e = differential_error(SpectralField(3), SpectralField(3), 0.5, spec);
    CHECK(max_abs_difference(e, field_scale(-2.0, u0)) <= 1e-15 * u0.max_abs_coeff());
    CHECK(sobolev_norm(differential_error(SpectralField(3), SpectralField(3), 0.0,
                                          spec3(0.0, SpectralField(3))), 0.0) == 0.0);
  }
  SUBCASE("dimension mismatch") {
    CHECK_THROWS_AS(differential_error(SpectralField(2), SpectralField(3), 0.0, spec3(0.0, u0)),
                    std::invalid_argument);
  }
}

TEST_CASE("Galerkin approximant") {
  SUBCASE("single-mode decay") {
    const WaveVector k{1, 2, 0};
    const auto u0 = single_pair(k, CVec{Complex(0.0, 1.0), Complex(0.0, -0.5), Complex(1.0, 0.5)});
    const double nu = 0.3;
    const auto spec = spec3(nu, u0);
    CHECK(sobolev_norm(bilinear_p(u0, u0), 0.0) <= 1e-15 * sobolev_norm(u0, 1.0) * sobolev_norm(u0, 0.0));
    GalerkinOptions o;
    o.samples = 21;
    const auto tr = galerkin_evolve(spec, 3, o);
    REQUIRE(tr.t.size() == 21);
    CHECK(!tr.ended_early);
    CHECK(tr.T_a == 1.0);
    double worst = 0.0;
    for (std::size_t i = 0; i < tr.t.size(); ++i) {
      const auto exact = field_scale(std::exp(-nu * 5.0 * tr.t[i]), u0);
      worst = std::max(worst, max_abs_difference(tr.ua[i], exact) / u0.max_abs_coeff());
    }
    CHECK(worst <= 1e-9);
    const auto est = tautological_estimators(tr, spec);
    for (double q : {3.0, 4.0, 5.0}) {
      for (double v : est.at(q).eps.values()) CHECK(v <= 1e-9 * sobolev_norm(u0, q + 2.0));
      CHECK(est.at(q).delta == 0.0);
    }
  }
  SUBCASE("zero datum stays zero") {
    const auto tr = galerkin_evolve(spec3(0.1, SpectralField(3)), 2);
    for (const auto& u : tr.ua) CHECK(sobolev_norm(u, 0.0) == 0.0);
  }
  SUBCASE("energy conservation without viscosity") {
    const auto u0 = testing::random_cube_field(3, 3, 21);
    auto spec = spec3(0.0, scale_to_norm(u0, 3.0, 1.0));
    spec.T_max = 0.5;
    GalerkinOptions o;
    o.samples = 11;
    const auto tr = galerkin_evolve(spec, 3, o);
    const double e0 = sobolev_norm(tr.ua.front(), 0.0);
    double worst = 0.0;
    for (const auto& u : tr.ua) worst = std::max(worst, testing::rel_diff(sobolev_norm(u, 0.0), e0));
    MESSAGE("energy drift " << worst);
    CHECK(worst <= 1e-8);
    CHECK(max_abs_difference(tr.ua.back(), tr.ua.front()) > 1e-6 * u0.max_abs_coeff());
  }
  SUBCASE("derivative samples are consistent with the field samples") {
    const auto spec = spec3(0.2, taylor_green(1.0));
    GalerkinOptions o;
    o.times = {0.0, 0.2, 0.2 + 1e-4, 0.2 + 2e-4, 0.5};
    const auto tr = galerkin_evolve(spec, 4, o);
    REQUIRE(tr.t.size() == 5);
    // Central difference at the middle sample; O(h^2) truncation plus
    // integrator error over the differencing step.
    const auto fd = field_scale(1.0 / 2e-4, field_axpy(-1.0, tr.ua[1], tr.ua[3]));
    const double defect = sobolev_norm(field_axpy(-1.0, fd, tr.dua[2]), 0.0) / sobolev_norm(tr.dua[2], 0.0);
    MESSAGE("C1 consistency defect " << defect);
    CHECK(defect <= 1e-6);
  }
  SUBCASE("truncation comparison (reported)") {
    RandomFieldOptions ro;
    ro.cube = 6;
    ro.decay = 3.0;
    auto spec = spec3(0.5, random_field(3, ro, 17));
    spec.T_max = 0.1;
    GalerkinOptions o;
    o.samples = 6;
    const auto e4 = estimator_samples(galerkin_evolve(spec, 4, o), spec);
    const auto e8 = estimator_samples(galerkin_evolve(spec, 8, o), spec);
    std::size_t below = 0, total = 0;
    for (std::size_t q = 0; q < e4.orders.size(); ++q) {
      for (std::size_t i = 0; i < e4.t.size(); ++i) {
        ++total;
        if (e8.eps[q][i] <= e4.eps[q][i] * (1.0 + 1e-6)) ++below;
      }
      MESSAGE("q=" << e4.orders[q] << " eps(M=4) at t=0.1: " << e4.eps[q].back() << ", eps(M=8): " << e8.eps[q].back()
                   << ", delta(M=4) " << e4.delta[q] << ", delta(M=8) " << e8.delta[q]);
    }
    MESSAGE(below << " of " << total << " M=8 samples are <= the M=4 sample");
    CHECK(e8.delta[0] < e4.delta[0]);
  }
  SUBCASE("argument checks") { CHECK_THROWS_AS(galerkin_evolve(spec3(0.1, taylor_green(1.0)), 0), ConfigError); }
}

TEST_CASE("time-Taylor approximant") {
  const auto u0 = testing::random_cube_field(3, 1, 31);
  const auto spec = spec3(0.0, u0);

  SUBCASE("N = 0") {
    const auto c = taylor_coefficients(spec, 0);
    REQUIRE(c.u.size() == 1);
    CHECK(max_abs_difference(c.u[0], u0) == 0.0);
    const auto tr = taylor_trace(c, 1.0, {0.0, 0.5});
    const auto e = differential_error(tr.ua[1], tr.dua[1], 0.5, spec);
    CHECK(max_abs_difference(e, field_scale(-1.0, bilinear_p(u0, u0))) <= 1e-15 * e.max_abs_coeff());
  }
  SUBCASE("N = 1 first coefficient") {
    const auto c = taylor_coefficients(spec, 1);
    CHECK(max_abs_difference(c.u[1], bilinear_p(u0, u0)) <= 1e-15 * c.u[1].max_abs_coeff());
  }
  SUBCASE("low-order residual coefficients vanish") {
    for (int N = 1; N <= 3; ++N) {
      const auto c = taylor_coefficients(spec, N);
      const auto e = taylor_residual(spec, c);
      REQUIRE(e.size() == static_cast<std::size_t>(2 * N + 1));
      for (int m = 0; m < N; ++m) CHECK(sobolev_norm(e[static_cast<std::size_t>(m)], 0.0) <= 1e-12);
      // The polynomial agrees with the directly evaluated defect.
      const auto tr = taylor_trace(c, 0.3, {0.0, 0.1, 0.3});
      for (std::size_t i = 0; i < tr.t.size(); ++i) {
        const auto direct = differential_error(tr.ua[i], tr.dua[i], tr.t[i], spec);
        const auto poly = eval_poly(e, tr.t[i], 3);
        CHECK(sobolev_norm(field_axpy(-1.0, poly, direct), 0.0) <= 1e-12 * std::max(1.0, sobolev_norm(direct, 0.0)));
      }
    }
  }
  SUBCASE("with polynomial forcing") {
    auto forced = spec;
    forced.forcing.taylor = {testing::random_cube_field(3, 1, 40), testing::random_cube_field(3, 1, 41),
                             testing::random_cube_field(3, 1, 42)};
    for (int N = 1; N <= 3; ++N) {
      const auto e = taylor_residual(forced, taylor_coefficients(forced, N));
      for (int m = 0; m < N; ++m) CHECK(sobolev_norm(e[static_cast<std::size_t>(m)], 0.0) <= 1e-12);
    }
  }
  SUBCASE("zero data") {
    const auto c = taylor_coefficients(spec3(0.0, SpectralField(3)), 3);
    for (const auto& u : c.u) CHECK(u.empty());
  }
  SUBCASE("rejections") {
    CHECK_THROWS_AS(taylor_coefficients(spec3(0.1, u0), 2), ConfigError);
    CHECK_THROWS_AS(taylor_coefficients(spec, -1), ConfigError);
  }
}

TEST_CASE("estimator samples are the computed norms") {
  const auto spec = spec3(0.2, taylor_green(1.5), {4.0});
  GalerkinOptions o;
  o.samples = 5;
  const auto tr = galerkin_evolve(spec, 3, o);
  const auto s = estimator_samples(tr, spec);
  CHECK(s.orders == std::vector<double>{3.0, 4.0, 5.0});
  for (std::size_t i = 0; i < s.t.size(); ++i) {
    const auto e = differential_error(tr.ua[i], tr.dua[i], tr.t[i], spec);
    for (std::size_t q = 0; q < s.orders.size(); ++q) {
      CHECK(s.D[q][i] == sobolev_norm(tr.ua[i], s.orders[q]));
      CHECK(s.eps[q][i] == doctest::Approx(sobolev_norm(e, s.orders[q])).epsilon(1e-9));
    }
  }
  auto bad = zero_approximant(3, 1.0, {0.5, 1.0});
  CHECK_THROWS_AS(estimator_samples(bad, spec), std::invalid_argument);
}
