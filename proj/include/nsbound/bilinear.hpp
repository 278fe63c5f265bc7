#pragma once

#include <complex>
#include <cstddef>
#include <memory>
#include <span>
#include <vector>

#include "nsbound/spectral_field.hpp"

namespace nsbound {

/// The Navier-Stokes bilinear map P(v, w) = -Leray(v . grad w), by exact
/// discrete convolution. Mode k of v . grad w is
///
///     (2 pi)^{-d/2} sum_h i (v_h . (k - h)) w_{k-h},
///
/// and the output is supported on the Minkowski sum of the two full mode
/// sets (nothing is truncated). Output modes are evaluated in parallel;
/// each mode sums its terms in a fixed order, so results do not depend on
/// the thread count.
SpectralField bilinear_p(const SpectralField& v, const SpectralField& w);

/// Serial reference for bilinear_p: accumulates every (h, j) pair of the two
/// full supports into mode h + j. Slower and independent of the
/// output-major kernel; kept for tests and benchmarks.
SpectralField bilinear_p_reference(const SpectralField& v, const SpectralField& w);

/// Cube-truncated bilinear map Pi_out P(v, w) for fields supported in the
/// cube |k|_inf <= input_cutoff, evaluated pseudo-spectrally with enough
/// padding that no aliased product mode lands in the output cube
/// (grid size > 2 * input_cutoff + output_cutoff). Agrees with
/// truncate_cube(bilinear_p(v, w), output_cutoff) up to roundoff.
///
/// Holds FFTW plans and scratch buffers; use one instance per thread.
class DealiasedProduct {
 public:
  DealiasedProduct(int dim, int input_cutoff, int output_cutoff);
  ~DealiasedProduct();
  DealiasedProduct(const DealiasedProduct&) = delete;
  DealiasedProduct& operator=(const DealiasedProduct&) = delete;

  int dim() const { return dim_; }
  int input_cutoff() const { return in_cut_; }
  int output_cutoff() const { return out_cut_; }
  int grid_size() const { return n_; }
  const std::vector<WaveVector>& input_modes() const { return in_modes_; }
  const std::vector<WaveVector>& output_modes() const { return out_modes_; }

  /// Dense interface: coefficients are flat (mode-major, dim per mode) and
  /// aligned with input_modes() / output_modes(). Pass an empty `w` to use
  /// w = v.
  void apply(std::span<const Complex> v, std::span<const Complex> w, std::span<Complex> out);

  /// Field interface; every output-cube mode is stored, including zeros.
  SpectralField operator()(const SpectralField& v, const SpectralField& w);

 private:
  struct Plans;

  std::size_t grid_index(const WaveVector& k) const;
  void to_physical(std::span<const Complex> coeffs, int comp_a, int comp_b, double* phys_a,
                   double* phys_b);

  int dim_;
  int in_cut_;
  int out_cut_;
  int n_;
  std::size_t points_;
  std::vector<WaveVector> in_modes_;
  std::vector<WaveVector> out_modes_;
  std::vector<std::size_t> in_index_;
  std::vector<std::size_t> out_index_;
  std::vector<std::size_t> out_neg_index_;
  std::unique_ptr<Plans> plans_;
};

/// Smallest integer >= n whose prime factors are all in {2, 3, 5}.
int smooth_fft_size(int n);

}  // namespace nsbound
