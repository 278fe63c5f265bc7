#include "nsbound/datum.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

namespace nsbound {

SpectralField taylor_green(double amplitude) {
  const double s = amplitude * std::pow(2.0 * std::numbers::pi, 1.5) / 8.0;
  std::vector<WaveVector> modes;
  std::vector<Complex> coeffs;
  for (int s1 : {-1, 1}) {
    for (int s2 : {-1, 1}) {
      for (int s3 : {-1, 1}) {
        const WaveVector k{s1, s2, s3};
        if (!k.is_canonical()) continue;
        modes.push_back(k);
        coeffs.push_back(Complex(0.0, -s1 * s));
        coeffs.push_back(Complex(0.0, s2 * s));
        coeffs.push_back(0.0);
      }
    }
  }
  return SpectralField::from_canonical(3, std::move(modes), std::move(coeffs));
}

SpectralField single_pair(const WaveVector& k, const CVec& c) {
  if (k.is_zero()) throw std::invalid_argument("single_pair: k must be nonzero");
  const auto d = static_cast<std::size_t>(k.dim);
  std::vector<Complex> coeffs(c.begin(), c.begin() + static_cast<std::ptrdiff_t>(d));
  WaveVector kc = k;
  if (!k.is_canonical()) {
    kc = -k;
    for (auto& z : coeffs) z = std::conj(z);
  }
  leray_project_mode(kc, coeffs);
  return SpectralField::from_canonical(k.dim, {kc}, std::move(coeffs));
}

SpectralField random_field(int dim, const RandomFieldOptions& opts, std::uint64_t seed) {
  if (opts.cube < 1) throw std::invalid_argument("random_field: cube must be >= 1");
  if (!(opts.l2_norm >= 0.0)) throw std::invalid_argument("random_field: l2_norm must be nonnegative");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const auto d = static_cast<std::size_t>(dim);
  std::vector<WaveVector> modes;
  std::vector<Complex> coeffs;
  for (const auto& k : cube_modes(dim, opts.cube)) {
    const double r = k.norm();
    if (r < opts.k_min || r > opts.k_max) continue;
    const double env = std::pow(r, -opts.decay);
    std::vector<Complex> c(d);
    for (auto& z : c) {
      const double re = normal(rng);
      const double im = normal(rng);
      z = env * Complex(re, im);
    }
    leray_project_mode(k, c);
    modes.push_back(k);
    coeffs.insert(coeffs.end(), c.begin(), c.end());
  }
  if (modes.empty()) throw std::invalid_argument("random_field: the band contains no lattice points");
  const auto v = SpectralField::from_sorted_unchecked(dim, std::move(modes), std::move(coeffs));
  return opts.l2_norm == 0.0 ? SpectralField(dim) : scale_to_norm(v, 0.0, opts.l2_norm);
}

SpectralField scale_to_norm(const SpectralField& v, double s, double value) {
  const double cur = sobolev_norm(v, s);
  if (!(cur > 0.0)) throw std::invalid_argument("scale_to_norm: the field is zero");
  return field_scale(value / cur, v);
}

}  // namespace nsbound
