#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>

#include "nsbound/datum.hpp"
#include "nsbound/spectral_field.hpp"
#include "nsbound/tame_constants.hpp"

namespace testing {

/// Shared on-disk cache of default-truncation constants.
inline std::filesystem::path cache_dir() { return NSBOUND_TEST_CACHE_DIR; }

inline nsbound::ConstantTable default_constants(int dim, const std::vector<nsbound::OrderPair>& pairs) {
  return nsbound::load_or_compute_constants(dim, pairs, nsbound::LatticeTruncation{}, cache_dir());
}

/// Random divergence-free field on the cube |k|_inf <= M with a seeded
/// spectral slope and L2 norm, so that samples span smooth and rough data.
inline nsbound::SpectralField random_cube_field(int dim, int M, std::uint64_t seed) {
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ull);
  std::uniform_real_distribution<double> slope(0.0, 4.0);
  std::uniform_real_distribution<double> lognorm(-2.0, 2.0);
  nsbound::RandomFieldOptions o;
  o.cube = M;
  o.decay = slope(rng);
  o.l2_norm = std::exp(lognorm(rng));
  return nsbound::random_field(dim, o, seed);
}

inline double rel_diff(double a, double b) {
  const double s = std::max(std::abs(a), std::abs(b));
  return s == 0.0 ? 0.0 : std::abs(a - b) / s;
}

}  // namespace testing
