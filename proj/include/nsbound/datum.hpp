#pragma once

#include <cstdint>
#include <limits>

#include "nsbound/spectral_field.hpp"

namespace nsbound {

/// Taylor-Green vortex u = A (sin x cos y cos z, -cos x sin y cos z, 0) on
/// the 3-torus: eight modes with |k_i| = 1.
SpectralField taylor_green(double amplitude);

/// One conjugate pair at +-k with coefficient c at k (projected onto the
/// plane orthogonal to k).
SpectralField single_pair(const WaveVector& k, const CVec& c);

struct RandomFieldOptions {
  int cube = 4;          ///< modes with |k|_inf <= cube ...
  double k_min = 0.0;    ///< ... and k_min <= |k| <= k_max
  double k_max = std::numeric_limits<double>::infinity();
  double decay = 0.0;    ///< coefficient envelope |k|^{-decay}
  double l2_norm = 1.0;  ///< final |v|_0
};

/// Seeded Gaussian coefficients on the band, Leray-projected and scaled to
/// the requested L2 norm. Identical seeds give identical fields.
SpectralField random_field(int dim, const RandomFieldOptions& opts, std::uint64_t seed);

/// v scaled so that |v|_s = value. Throws for the zero field.
SpectralField scale_to_norm(const SpectralField& v, double s, double value);

}  // namespace nsbound
