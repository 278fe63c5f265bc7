#pragma once

#include <array>
#include <complex>
#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "nsbound/wave_vector.hpp"

namespace nsbound {

using Complex = std::complex<double>;

/// A complex d-vector (only the first `dim` entries are meaningful).
using CVec = std::array<Complex, kMaxDim>;

/// Unconstrained Fourier data, keyed by arbitrary lattice points.
using RawModes = std::map<WaveVector, CVec>;

/// Truncated Fourier representation of a real, mean-zero, divergence-free
/// vector field on the d-torus,
///
///     v(x) = (2 pi)^{-d/2} sum_k v_k exp(i k.x),   v_{-k} = conj(v_k).
///
/// Only canonical representatives k (leading nonzero entry positive) are
/// stored, sorted lexicographically; the coefficient of -k is implied by
/// conjugation, so reality holds by construction and k = 0 never appears.
/// Values are immutable once built.
class SpectralField {
 public:
  SpectralField() = default;
  explicit SpectralField(int dim);

  /// Builds a field from canonical modes with `dim` coefficients each
  /// (flat, mode-major). Modes are sorted; duplicates, the zero mode and
  /// non-canonical modes are rejected. Throws if any mode violates
  /// k.c_k = 0 beyond `div_tol` relative to the largest coefficient.
  static SpectralField from_canonical(int dim, std::vector<WaveVector> modes,
                                      std::vector<Complex> coeffs, double div_tol = 1e-12);

  /// Same as from_canonical but trusts the caller: modes must already be
  /// sorted, unique, canonical and nonzero; coefficients divergence-free.
  static SpectralField from_sorted_unchecked(int dim, std::vector<WaveVector> modes,
                                             std::vector<Complex> coeffs);

  int dim() const { return dim_; }
  std::size_t size() const { return modes_.size(); }
  bool empty() const { return modes_.empty(); }

  const std::vector<WaveVector>& modes() const { return modes_; }
  const std::vector<Complex>& data() const { return coeffs_; }
  std::span<const Complex> coeff(std::size_t i) const {
    return {coeffs_.data() + i * static_cast<std::size_t>(dim_), static_cast<std::size_t>(dim_)};
  }

  /// Index of a canonical mode, if stored.
  std::optional<std::size_t> find(const WaveVector& canonical_k) const;

  /// Coefficient at any lattice point (conjugated for non-canonical k,
  /// zero when absent).
  CVec at(const WaveVector& k) const;

  /// max |k|_inf over stored modes (0 for the empty field).
  int max_abs_index() const;
  /// max over stored modes of the Euclidean coefficient norm |c_k|.
  double max_abs_coeff() const;

 private:
  int dim_ = 0;
  std::vector<WaveVector> modes_;
  std::vector<Complex> coeffs_;
};

/// Measured deviation from the field invariants, relative to max_k |c_k|.
struct FieldDiagnostics {
  double max_divergence = 0.0;  ///< max_k |k.c_k| / max_k |c_k|
  double max_reality = 0.0;     ///< max_k |c_{-k} - conj(c_k)| / max_k |c_k|
  bool has_zero_mode = false;
};

FieldDiagnostics check_invariants(const SpectralField& v);

/// Leray projection of raw Fourier data onto divergence-free, mean-zero,
/// real fields. The zero mode is dropped. When both k and -k are present
/// the real part c_k <- (c_k + conj(c_{-k})) / 2 is kept; when only one is
/// present its conjugate is inserted for the other.
SpectralField leray_project(const RawModes& raw, int dim);

/// In-place Leray projection of one coefficient vector at mode k.
void leray_project_mode(const WaveVector& k, std::span<Complex> c);

/// sum_{k != 0} |k|^{2s} conj(v_k).w_k over the full lattice.
double sobolev_inner(const SpectralField& v, const SpectralField& w, double s);

/// sqrt(sobolev_inner(v, v, s)).
double sobolev_norm(const SpectralField& v, double s);

/// |k|^s for a lattice point with squared norm `k2`, via exp(s log|k|).
inline double lattice_power(std::int64_t k2, double s) {
  return std::exp(0.5 * s * std::log(static_cast<double>(k2)));
}

SpectralField laplacian(const SpectralField& v);

/// a*v + w, modewise over the union of the two mode sets.
SpectralField field_axpy(double a, const SpectralField& v, const SpectralField& w);

SpectralField field_scale(double a, const SpectralField& v);

/// Keeps the modes with |k|_inf <= M.
SpectralField truncate_cube(const SpectralField& v, int M);

/// Drops stored modes whose coefficient norm is exactly zero.
SpectralField prune_zeros(const SpectralField& v);

/// max_k |v_k - w_k| over the union of modes.
double max_abs_difference(const SpectralField& v, const SpectralField& w);

/// Canonical modes of the cube |k|_inf <= M in lexicographic order.
std::vector<WaveVector> cube_modes(int dim, int M);

}  // namespace nsbound
