#include "nsbound/spectral_field.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace nsbound {

namespace {

void require_dim(int dim) {
  if (dim < 2 || dim > kMaxDim) {
    throw std::invalid_argument("spectral field dimension must be in [2, " +
                                std::to_string(kMaxDim) + "], got " + std::to_string(dim));
  }
}

void require_same_dim(const SpectralField& v, const SpectralField& w, const char* op) {
  if (v.dim() != w.dim()) {
    throw std::invalid_argument(std::string(op) + ": dimension mismatch (" +
                                std::to_string(v.dim()) + " vs " + std::to_string(w.dim()) + ")");
  }
}

double cvec_norm(std::span<const Complex> c) {
  double s = 0.0;
  for (const auto& z : c) s += std::norm(z);
  return std::sqrt(s);
}

Complex k_dot(const WaveVector& k, std::span<const Complex> c) {
  Complex s = 0.0;
  for (int i = 0; i < k.dim; ++i) s += static_cast<double>(k[i]) * c[i];
  return s;
}

}  // namespace

SpectralField::SpectralField(int dim) : dim_(dim) { require_dim(dim); }

SpectralField SpectralField::from_canonical(int dim, std::vector<WaveVector> modes,
                                            std::vector<Complex> coeffs, double div_tol) {
  require_dim(dim);
  const auto d = static_cast<std::size_t>(dim);
  if (coeffs.size() != modes.size() * d) {
    throw std::invalid_argument("SpectralField: coefficient count does not match modes x dim");
  }
  for (const auto& k : modes) {
    if (k.dim != dim) throw std::invalid_argument("SpectralField: wave vector dimension mismatch");
    if (k.is_zero()) throw std::invalid_argument("SpectralField: zero mode is not allowed");
    if (!k.is_canonical()) {
      throw std::invalid_argument("SpectralField: non-canonical mode " + k.to_string());
    }
  }
  std::vector<std::size_t> order(modes.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return modes[a] < modes[b]; });
  std::vector<WaveVector> sorted_modes;
  std::vector<Complex> sorted_coeffs;
  sorted_modes.reserve(modes.size());
  sorted_coeffs.reserve(coeffs.size());
  for (std::size_t i : order) {
    if (!sorted_modes.empty() && sorted_modes.back() == modes[i]) {
      throw std::invalid_argument("SpectralField: duplicate mode " + modes[i].to_string());
    }
    sorted_modes.push_back(modes[i]);
    sorted_coeffs.insert(sorted_coeffs.end(), coeffs.begin() + static_cast<std::ptrdiff_t>(i * d),
                         coeffs.begin() + static_cast<std::ptrdiff_t>((i + 1) * d));
  }
  SpectralField f = from_sorted_unchecked(dim, std::move(sorted_modes), std::move(sorted_coeffs));
  const auto diag = check_invariants(f);
  if (diag.max_divergence > div_tol) {
    throw std::invalid_argument("SpectralField: field is not divergence-free (relative defect " +
                                std::to_string(diag.max_divergence) + ")");
  }
  return f;
}

SpectralField SpectralField::from_sorted_unchecked(int dim, std::vector<WaveVector> modes,
                                                   std::vector<Complex> coeffs) {
  SpectralField f(dim);
  f.modes_ = std::move(modes);
  f.coeffs_ = std::move(coeffs);
  return f;
}

std::optional<std::size_t> SpectralField::find(const WaveVector& canonical_k) const {
  auto it = std::lower_bound(modes_.begin(), modes_.end(), canonical_k);
  if (it == modes_.end() || *it != canonical_k) return std::nullopt;
  return static_cast<std::size_t>(it - modes_.begin());
}

CVec SpectralField::at(const WaveVector& k) const {
  CVec out{};
  if (k.is_zero()) return out;
  const bool canon = k.is_canonical();
  auto idx = find(canon ? k : -k);
  if (!idx) return out;
  auto c = coeff(*idx);
  for (int i = 0; i < dim_; ++i) out[i] = canon ? c[i] : std::conj(c[i]);
  return out;
}

int SpectralField::max_abs_index() const {
  int m = 0;
  for (const auto& k : modes_) m = std::max(m, k.max_abs());
  return m;
}

double SpectralField::max_abs_coeff() const {
  double m = 0.0;
  for (std::size_t i = 0; i < modes_.size(); ++i) m = std::max(m, cvec_norm(coeff(i)));
  return m;
}

FieldDiagnostics check_invariants(const SpectralField& v) {
  FieldDiagnostics diag;
  const double scale = v.max_abs_coeff();
  for (std::size_t i = 0; i < v.size(); ++i) {
    const auto& k = v.modes()[i];
    if (k.is_zero()) diag.has_zero_mode = true;
    if (scale > 0.0) {
      diag.max_divergence = std::max(diag.max_divergence, std::abs(k_dot(k, v.coeff(i))) / scale);
    }
    // c_{-k} is reconstructed from c_k, so check that round trip literally.
    const CVec neg = v.at(-k);
    const CVec pos = v.at(k);
    double defect = 0.0;
    for (int j = 0; j < v.dim(); ++j) defect += std::norm(neg[j] - std::conj(pos[j]));
    if (scale > 0.0) diag.max_reality = std::max(diag.max_reality, std::sqrt(defect) / scale);
  }
  return diag;
}

void leray_project_mode(const WaveVector& k, std::span<Complex> c) {
  const double k2 = static_cast<double>(k.norm2());
  const Complex kc = k_dot(k, c) / k2;
  for (int i = 0; i < k.dim; ++i) c[i] -= kc * static_cast<double>(k[i]);
}

SpectralField leray_project(const RawModes& raw, int dim) {
  require_dim(dim);
  const auto d = static_cast<std::size_t>(dim);
  std::vector<WaveVector> modes;
  std::vector<Complex> coeffs;
  for (const auto& [k, c] : raw) {
    if (k.dim != dim) throw std::invalid_argument("leray_project: wave vector dimension mismatch");
    if (k.is_zero()) continue;
    const WaveVector kc = k.canonical();
    // Visit each {k, -k} pair once, via whichever member the map reaches first.
    if (!k.is_canonical() && raw.count(kc)) continue;
    CVec value{};
    auto pos = raw.find(kc);
    auto neg = raw.find(-kc);
    for (std::size_t i = 0; i < d; ++i) {
      if (pos != raw.end() && neg != raw.end()) {
        value[i] = 0.5 * (pos->second[i] + std::conj(neg->second[i]));
      } else if (pos != raw.end()) {
        value[i] = pos->second[i];
      } else {
        value[i] = std::conj(neg->second[i]);
      }
    }
    leray_project_mode(kc, std::span<Complex>(value.data(), d));
    modes.push_back(kc);
    coeffs.insert(coeffs.end(), value.begin(), value.begin() + dim);
  }
  // Canonical representatives do not come out of the map in sorted order.
  std::vector<std::size_t> order(modes.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return modes[a] < modes[b]; });
  std::vector<WaveVector> sm;
  std::vector<Complex> sc;
  sm.reserve(modes.size());
  sc.reserve(coeffs.size());
  for (std::size_t i : order) {
    if (!sm.empty() && sm.back() == modes[i]) continue;
    sm.push_back(modes[i]);
    sc.insert(sc.end(), coeffs.begin() + static_cast<std::ptrdiff_t>(i * d),
              coeffs.begin() + static_cast<std::ptrdiff_t>((i + 1) * d));
  }
  return SpectralField::from_sorted_unchecked(dim, std::move(sm), std::move(sc));
}

double sobolev_inner(const SpectralField& v, const SpectralField& w, double s) {
  require_same_dim(v, w, "sobolev_inner");
  const auto& mv = v.modes();
  const auto& mw = w.modes();
  double sum = 0.0;
  std::size_t i = 0, j = 0;
  while (i < mv.size() && j < mw.size()) {
    if (mv[i] < mw[j]) {
      ++i;
    } else if (mw[j] < mv[i]) {
      ++j;
    } else {
      auto a = v.coeff(i);
      auto b = w.coeff(j);
      double re = 0.0;
      for (int c = 0; c < v.dim(); ++c) re += a[c].real() * b[c].real() + a[c].imag() * b[c].imag();
      // The -k term is the conjugate of the k term, hence the factor 2.
      sum += 2.0 * lattice_power(mv[i].norm2(), 2.0 * s) * re;
      ++i;
      ++j;
    }
  }
  return sum;
}

double sobolev_norm(const SpectralField& v, double s) {
  return std::sqrt(std::max(0.0, sobolev_inner(v, v, s)));
}

SpectralField laplacian(const SpectralField& v) {
  std::vector<Complex> coeffs = v.data();
  const auto d = static_cast<std::size_t>(v.dim());
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double f = -static_cast<double>(v.modes()[i].norm2());
    for (std::size_t c = 0; c < d; ++c) coeffs[i * d + c] *= f;
  }
  return SpectralField::from_sorted_unchecked(v.dim(), v.modes(), std::move(coeffs));
}

SpectralField field_axpy(double a, const SpectralField& v, const SpectralField& w) {
  require_same_dim(v, w, "field_axpy");
  const auto d = static_cast<std::size_t>(v.dim());
  const auto& mv = v.modes();
  const auto& mw = w.modes();
  std::vector<WaveVector> modes;
  std::vector<Complex> coeffs;
  modes.reserve(std::max(mv.size(), mw.size()));
  coeffs.reserve(modes.capacity() * d);
  std::size_t i = 0, j = 0;
  while (i < mv.size() || j < mw.size()) {
    const bool take_v = j == mw.size() || (i < mv.size() && !(mw[j] < mv[i]));
    const bool take_w = i == mv.size() || (j < mw.size() && !(mv[i] < mw[j]));
    modes.push_back(take_v ? mv[i] : mw[j]);
    for (std::size_t c = 0; c < d; ++c) {
      Complex z = 0.0;
      if (take_v) z += a * v.coeff(i)[c];
      if (take_w) z += w.coeff(j)[c];
      coeffs.push_back(z);
    }
    if (take_v) ++i;
    if (take_w) ++j;
  }
  return SpectralField::from_sorted_unchecked(v.dim(), std::move(modes), std::move(coeffs));
}

SpectralField field_scale(double a, const SpectralField& v) {
  std::vector<Complex> coeffs = v.data();
  for (auto& z : coeffs) z *= a;
  return SpectralField::from_sorted_unchecked(v.dim(), v.modes(), std::move(coeffs));
}

SpectralField truncate_cube(const SpectralField& v, int M) {
  std::vector<WaveVector> modes;
  std::vector<Complex> coeffs;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (v.modes()[i].max_abs() > M) continue;
    modes.push_back(v.modes()[i]);
    auto c = v.coeff(i);
    coeffs.insert(coeffs.end(), c.begin(), c.end());
  }
  return SpectralField::from_sorted_unchecked(v.dim(), std::move(modes), std::move(coeffs));
}

SpectralField prune_zeros(const SpectralField& v) {
  std::vector<WaveVector> modes;
  std::vector<Complex> coeffs;
  for (std::size_t i = 0; i < v.size(); ++i) {
    auto c = v.coeff(i);
    if (std::all_of(c.begin(), c.end(), [](const Complex& z) { return z == Complex{}; })) continue;
    modes.push_back(v.modes()[i]);
    coeffs.insert(coeffs.end(), c.begin(), c.end());
  }
  return SpectralField::from_sorted_unchecked(v.dim(), std::move(modes), std::move(coeffs));
}

double max_abs_difference(const SpectralField& v, const SpectralField& w) {
  const SpectralField diff = field_axpy(-1.0, w, v);
  return diff.max_abs_coeff();
}

std::vector<WaveVector> cube_modes(int dim, int M) {
  require_dim(dim);
  std::vector<WaveVector> out;
  WaveVector k(dim);
  for (int i = 0; i < dim; ++i) k[i] = -M;
  while (true) {
    if (k.is_canonical()) out.push_back(k);
    int i = dim - 1;
    while (i >= 0 && k[i] == M) {
      k[i] = -M;
      --i;
    }
    if (i < 0) break;
    ++k[i];
  }
  return out;  // odometer order is lexicographic
}

}  // namespace nsbound
