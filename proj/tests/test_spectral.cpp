#include <doctest.h>
#include <omp.h>

#include <cmath>
#include <numbers>

#include "nsbound/bilinear.hpp"
#include "nsbound/datum.hpp"
#include "nsbound/spectral_field.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace nsbound;

namespace {

SpectralField unit_pair_x() { return single_pair({1, 0, 0}, CVec{0.0, 1.0, 0.0}); }

double relative_to_oracle(const SpectralField& got, const oracle::Full& want) {
  const double scale = std::sqrt(oracle::l2sq(want));
  const double dist = oracle::l2_distance(want, got);
  return scale == 0.0 ? dist : dist / scale;
}

}  // namespace

TEST_CASE("leray projection") {
  SUBCASE("hand-computed mode") {
    RawModes raw;
    raw[WaveVector{1, 0, 0}] = CVec{2.0, 1.0, 0.0};
    const auto v = leray_project(raw, 3);
    REQUIRE(v.size() == 1);
    const auto c = v.at({1, 0, 0});
    CHECK(std::abs(c[0]) == 0.0);
    CHECK(c[1] == Complex(1.0));
    CHECK(std::abs(c[2]) == 0.0);
    CHECK(v.at({-1, 0, 0})[1] == Complex(1.0));
  }
  SUBCASE("identity on divergence-free data") {
    const auto u = testing::random_cube_field(3, 3, 7);
    RawModes raw;
    for (std::size_t i = 0; i < u.size(); ++i) {
      CVec c{};
      for (int j = 0; j < 3; ++j) c[j] = u.coeff(i)[j];
      raw[u.modes()[i]] = c;
    }
    CHECK(max_abs_difference(leray_project(raw, 3), u) <= 1e-15 * u.max_abs_coeff());
  }
  SUBCASE("gradients are annihilated") {
    RawModes raw;
    const Complex phi(0.3, -1.2);
    for (const auto& k : cube_modes(3, 2)) {
      CVec c{};
      for (int j = 0; j < 3; ++j) c[j] = Complex(0.0, 1.0) * static_cast<double>(k[j]) * phi;
      raw[k] = c;
    }
    CHECK(sobolev_norm(leray_project(raw, 3), 0.0) <= 1e-14);
  }
  SUBCASE("zero mode dropped and missing partners inserted") {
    RawModes raw;
    raw[WaveVector(3)] = CVec{1.0, 1.0, 1.0};
    raw[WaveVector{0, -1, 0}] = CVec{Complex(0.0, 2.0), 0.0, 1.0};
    const auto v = leray_project(raw, 3);
    REQUIRE(v.size() == 1);
    CHECK(v.modes()[0] == WaveVector{0, 1, 0});
    CHECK(v.at({0, 1, 0})[2] == Complex(1.0));
    CHECK(v.at({0, -1, 0})[2] == Complex(1.0));
    CHECK(!check_invariants(v).has_zero_mode);
  }
  SUBCASE("mismatched conjugates are symmetrized") {
    RawModes raw;
    raw[WaveVector{0, 0, 1}] = CVec{Complex(1.0, 1.0), 0.0, 0.0};
    raw[WaveVector{0, 0, -1}] = CVec{Complex(3.0, 1.0), 0.0, 0.0};
    const auto v = leray_project(raw, 3);
    CHECK(v.at({0, 0, 1})[0] == Complex(2.0, 0.0));
  }
  SUBCASE("rejects d < 2") { CHECK_THROWS_AS(leray_project(RawModes{}, 1), std::invalid_argument); }
}

TEST_CASE("sobolev inner products and norms") {
  const auto v = unit_pair_x();
  for (double s : {-1.5, 0.0, 1.0, 2.5, 7.0}) {
    CHECK(sobolev_inner(v, v, s) == doctest::Approx(2.0).epsilon(1e-15));
    CHECK(sobolev_norm(v, s) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-15));
    CHECK(sobolev_norm(SpectralField(3), s) == 0.0);
  }
  const auto w = single_pair({2, 0}, CVec{0.0, 1.0});
  for (double s : {0.0, 0.5, 1.0, 3.0, 4.25})
    CHECK(sobolev_norm(w, s) == doctest::Approx(std::pow(2.0, s) * std::sqrt(2.0)).epsilon(1e-14));

  SUBCASE("brute-force oracle at M = 4") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      const auto a = testing::random_cube_field(3, 4, 2 * seed);
      const auto b = testing::random_cube_field(3, 4, 2 * seed + 1);
      for (double s : {0.0, 1.0, 2.5, 3.0}) {
        const double want = oracle::inner(a, b, s);
        const double scale = sobolev_norm(a, s) * sobolev_norm(b, s);
        CHECK(std::abs(sobolev_inner(a, b, s) - want) <= 1e-12 * scale);
      }
    }
  }
  SUBCASE("symmetry") {
    const auto a = testing::random_cube_field(3, 5, 11);
    const auto b = testing::random_cube_field(3, 3, 12);
    for (double s : {0.0, 1.7, 4.0}) {
      const double ab = sobolev_inner(a, b, s);
      const double ba = sobolev_inner(b, a, s);
      CHECK(std::abs(ab - ba) <= 1e-13 * std::max(std::abs(ab), sobolev_norm(a, s) * sobolev_norm(b, s) * 1e-3));
    }
  }
  SUBCASE("monotone in the order on 1000 fields") {
    int violations = 0;
    for (std::uint64_t seed = 0; seed < 1000; ++seed) {
      const int d = seed % 2 == 0 ? 3 : 2;
      const auto u = testing::random_cube_field(d, 1 + static_cast<int>(seed % 4), 1000 + seed);
      double prev = sobolev_norm(u, 0.0);
      for (double s : {0.5, 1.0, 2.0, 2.5, 3.0, 4.0, 6.0}) {
        const double cur = sobolev_norm(u, s);
        if (cur < prev - 1e-13 * prev) ++violations;
        prev = cur;
      }
    }
    CHECK(violations == 0);
  }
  SUBCASE("dimension mismatch") {
    CHECK_THROWS_AS(sobolev_inner(v, SpectralField(2), 1.0), std::invalid_argument);
  }
}

TEST_CASE("field invariants of constructed fields") {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const int d = 2 + static_cast<int>(seed % 2);
    const auto u = testing::random_cube_field(d, 4, seed);
    const auto diag = check_invariants(u);
    CHECK(diag.max_divergence <= 1e-12);
    CHECK(diag.max_reality <= 1e-12);
    CHECK(!diag.has_zero_mode);
    const auto p = bilinear_p(u, testing::random_cube_field(d, 2, seed + 100));
    const auto dp = check_invariants(p);
    CHECK(dp.max_divergence <= 1e-12);
    CHECK(dp.max_reality <= 1e-12);
    CHECK(!dp.has_zero_mode);
  }
  CHECK(check_invariants(taylor_green(2.0)).max_divergence == 0.0);
}

TEST_CASE("field construction errors") {
  CHECK_THROWS_AS(SpectralField(1), std::invalid_argument);
  CHECK_THROWS_AS(SpectralField::from_canonical(3, {WaveVector{-1, 0, 0}}, {0.0, 1.0, 0.0}),
                  std::invalid_argument);
  CHECK_THROWS_AS(SpectralField::from_canonical(3, {WaveVector(3)}, {0.0, 1.0, 0.0}), std::invalid_argument);
  CHECK_THROWS_AS(SpectralField::from_canonical(3, {WaveVector{1, 0, 0}}, {1.0, 1.0, 0.0}),
                  std::invalid_argument);
  CHECK_THROWS_AS(SpectralField::from_canonical(3, {WaveVector{1, 0, 0}, WaveVector{1, 0, 0}},
                                                {0.0, 1.0, 0.0, 0.0, 1.0, 0.0}),
                  std::invalid_argument);
}

TEST_CASE("laplacian") {
  CHECK(laplacian(SpectralField(3)).empty());
  const auto v = unit_pair_x();
  CHECK(max_abs_difference(laplacian(v), field_scale(-1.0, v)) == 0.0);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto u = testing::random_cube_field(3, 4, seed);
    for (double s : {0.0, 1.0, 2.5})
      CHECK(sobolev_norm(laplacian(u), s) == doctest::Approx(sobolev_norm(u, s + 2.0)).epsilon(1e-13));
  }
}

TEST_CASE("field_axpy") {
  const auto v = testing::random_cube_field(3, 3, 1);
  const auto w = testing::random_cube_field(3, 2, 2);
  CHECK(max_abs_difference(field_axpy(0.0, v, w), w) == 0.0);
  CHECK(max_abs_difference(field_axpy(1.0, v, SpectralField(3)), v) == 0.0);
  CHECK(sobolev_norm(field_axpy(-1.0, v, v), 0.0) == 0.0);
  CHECK_THROWS_AS(field_axpy(1.0, v, SpectralField(2)), std::invalid_argument);
}

TEST_CASE("bilinear map examples") {
  const auto v = unit_pair_x();
  CHECK(sobolev_norm(bilinear_p(v, SpectralField(3)), 0.0) == 0.0);

  SUBCASE("a single pair does not interact with itself") {
    const auto a = single_pair({1, 2, -1}, CVec{Complex(1.0, 0.5), Complex(-0.5, 0.0), Complex(0.0, 0.0)});
    const double sa = sobolev_norm(a, 0.0) * sobolev_norm(a, 1.0);
    CHECK(sobolev_norm(bilinear_p(a, a), 0.0) <= 1e-14 * sa);
    CHECK(std::sqrt(oracle::l2sq(oracle::bilinear(a, a))) <= 1e-14 * sa);
    const auto b = single_pair({3, 1}, CVec{Complex(-1.0, 0.0), Complex(3.0, 2.0)});
    CHECK(sobolev_norm(bilinear_p(b, b), 0.0) <= 1e-14 * sobolev_norm(b, 0.0) * sobolev_norm(b, 1.0));
  }
  SUBCASE("crossed pairs") {
    const auto w = single_pair({0, 1, 0}, CVec{1.0, 0.0, 0.0});
    const auto p = prune_zeros(bilinear_p(v, w));
    REQUIRE(p.size() == 2);
    CHECK(p.modes()[0] == WaveVector{1, -1, 0});
    CHECK(p.modes()[1] == WaveVector{1, 1, 0});
    CHECK(relative_to_oracle(p, oracle::bilinear(v, w)) <= 1e-12);
  }
  SUBCASE("dimension mismatch") { CHECK_THROWS_AS(bilinear_p(v, SpectralField(2)), std::invalid_argument); }
}

TEST_CASE("bilinear map against the double-sum oracle") {
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    const int d = 2 + static_cast<int>(seed % 2);
    const int M = 1 + static_cast<int>(seed % 4);
    const auto a = testing::random_cube_field(d, M, 3 * seed);
    const auto b = testing::random_cube_field(d, 1 + static_cast<int>((seed / 2) % 4), 3 * seed + 1);
    const auto want = oracle::bilinear(a, b);
    CHECK(relative_to_oracle(bilinear_p(a, b), want) <= 1e-12);
    CHECK(relative_to_oracle(bilinear_p_reference(a, b), want) <= 1e-12);
  }
}

TEST_CASE("parallel and serial kernels agree") {
  const auto a = testing::random_cube_field(3, 4, 5);
  const auto b = testing::random_cube_field(3, 4, 6);
  const int saved = omp_get_max_threads();
  omp_set_num_threads(1);
  const auto one = bilinear_p(a, b);
  omp_set_num_threads(4);
  const auto four = bilinear_p(a, b);
  omp_set_num_threads(saved);
  CHECK(one.modes() == four.modes());
  CHECK(one.data() == four.data());
  const auto ref = bilinear_p_reference(a, b);
  CHECK(max_abs_difference(one, ref) <= 1e-13 * one.max_abs_coeff());
}

TEST_CASE("dealiased product equals the truncated exact product") {
  for (int d : {2, 3}) {
    for (int M : {2, 4}) {
      DealiasedProduct full(d, M, 2 * M);
      DealiasedProduct cut(d, M, M);
      CHECK(full.grid_size() > 4 * M);
      for (std::uint64_t seed = 0; seed < 3; ++seed) {
        const auto a = testing::random_cube_field(d, M, 40 + seed);
        const auto b = testing::random_cube_field(d, M, 80 + seed);
        const auto exact = bilinear_p(a, b);
        const double scale = exact.max_abs_coeff();
        CHECK(max_abs_difference(full(a, b), exact) <= 1e-13 * scale);
        CHECK(max_abs_difference(cut(a, b), truncate_cube(exact, M)) <= 1e-13 * scale);
        CHECK(max_abs_difference(full(a, a), bilinear_p(a, a)) <= 1e-13 * bilinear_p(a, a).max_abs_coeff());
      }
    }
  }
  DealiasedProduct small(3, 2, 2);
  CHECK_THROWS_AS(small(testing::random_cube_field(3, 3, 1), testing::random_cube_field(3, 2, 1)),
                  std::invalid_argument);
  CHECK(smooth_fft_size(7) == 8);
  CHECK(smooth_fft_size(31) == 32);
  CHECK(smooth_fft_size(25) == 25);
}

TEST_CASE("truncation helpers") {
  const auto u = testing::random_cube_field(3, 4, 3);
  const auto t = truncate_cube(u, 2);
  CHECK(t.max_abs_index() == 2);
  CHECK(cube_modes(3, 2).size() == 62);
  CHECK(cube_modes(2, 3).size() == 24);
  CHECK(prune_zeros(field_axpy(-1.0, u, u)).empty());
}
