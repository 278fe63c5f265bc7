#include "nsbound/bilinear.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>

namespace nsbound {

namespace {

constexpr Complex kI{0.0, 1.0};

double fourier_prefactor(int dim) { return std::pow(2.0 * std::numbers::pi, -0.5 * dim); }

/// One member of the full support: lattice point, canonical index and
/// whether the stored coefficient must be conjugated.
struct SupportEntry {
  WaveVector k;
  std::size_t index;
  bool conj;
};

std::vector<SupportEntry> full_support(const SpectralField& f) {
  std::vector<SupportEntry> out;
  out.reserve(2 * f.size());
  for (std::size_t i = 0; i < f.size(); ++i) {
    out.push_back({f.modes()[i], i, false});
    out.push_back({-f.modes()[i], i, true});
  }
  return out;
}

/// Lookup table from lattice points of a full support to SupportEntry
/// data. Dense over the bounding box when that is small, hashed otherwise.
class SupportIndex {
 public:
  explicit SupportIndex(const SpectralField& f) : dim_(f.dim()) {
    ext_.fill(0);
    for (const auto& k : f.modes())
      for (int i = 0; i < dim_; ++i) ext_[i] = std::max(ext_[i], std::abs(k[i]));
    std::size_t volume = 1;
    dense_ = true;
    for (int i = 0; i < dim_; ++i) {
      stride_[i] = volume;
      volume *= static_cast<std::size_t>(2 * ext_[i] + 1);
      if (volume > (std::size_t{1} << 24)) {
        dense_ = false;
        break;
      }
    }
    if (dense_) {
      table_.assign(volume, 0);
      for (std::size_t i = 0; i < f.size(); ++i) {
        table_[offset(f.modes()[i])] = static_cast<std::int64_t>(i) + 1;
        table_[offset(-f.modes()[i])] = -(static_cast<std::int64_t>(i) + 1);
      }
    } else {
      for (std::size_t i = 0; i < f.size(); ++i) {
        hash_.emplace(f.modes()[i], static_cast<std::int64_t>(i) + 1);
        hash_.emplace(-f.modes()[i], -(static_cast<std::int64_t>(i) + 1));
      }
    }
  }

  /// Signed 1-based index: positive for stored k, negative for conj, 0 absent.
  std::int64_t lookup(const WaveVector& k) const {
    if (dense_) {
      for (int i = 0; i < dim_; ++i)
        if (std::abs(k[i]) > ext_[i]) return 0;
      return table_[offset(k)];
    }
    auto it = hash_.find(k);
    return it == hash_.end() ? 0 : it->second;
  }

 private:
  std::size_t offset(const WaveVector& k) const {
    std::size_t off = 0;
    for (int i = 0; i < dim_; ++i) off += static_cast<std::size_t>(k[i] + ext_[i]) * stride_[i];
    return off;
  }

  int dim_;
  bool dense_ = true;
  std::array<int, kMaxDim> ext_{};
  std::array<std::size_t, kMaxDim> stride_{};
  std::vector<std::int64_t> table_;
  std::unordered_map<WaveVector, std::int64_t, WaveVectorHash> hash_;
};

/// Canonical nonzero members of the Minkowski sum supp(v) + supp(w), sorted.
std::vector<WaveVector> sum_support(const std::vector<SupportEntry>& sv,
                                    const std::vector<SupportEntry>& sw, int dim) {
  std::array<int, kMaxDim> ext{};
  for (const auto& e : sv)
    for (int i = 0; i < dim; ++i) ext[i] = std::max(ext[i], std::abs(e.k[i]));
  std::array<int, kMaxDim> ext_w{};
  for (const auto& e : sw)
    for (int i = 0; i < dim; ++i) ext_w[i] = std::max(ext_w[i], std::abs(e.k[i]));
  std::array<std::size_t, kMaxDim> stride{};
  std::size_t volume = 1;
  bool dense = true;
  for (int i = 0; i < dim; ++i) {
    ext[i] += ext_w[i];
    stride[i] = volume;
    volume *= static_cast<std::size_t>(2 * ext[i] + 1);
    if (volume > (std::size_t{1} << 26)) {
      dense = false;
      break;
    }
  }
  std::vector<WaveVector> out;
  if (dense) {
    std::vector<char> mark(volume, 0);
    for (const auto& a : sv) {
      for (const auto& b : sw) {
        const WaveVector k = a.k + b.k;
        if (!k.is_canonical()) continue;
        std::size_t off = 0;
        for (int i = 0; i < dim; ++i) off += static_cast<std::size_t>(k[i] + ext[i]) * stride[i];
        mark[off] = 1;
      }
    }
    // Walk the box in lexicographic order (first coordinate most significant).
    WaveVector k(dim);
    for (int i = 0; i < dim; ++i) k[i] = -ext[i];
    while (true) {
      std::size_t off = 0;
      for (int i = 0; i < dim; ++i) off += static_cast<std::size_t>(k[i] + ext[i]) * stride[i];
      if (mark[off]) out.push_back(k);
      int i = dim - 1;
      while (i >= 0 && k[i] == ext[i]) {
        k[i] = -ext[i];
        --i;
      }
      if (i < 0) break;
      ++k[i];
    }
  } else {
    std::unordered_map<WaveVector, char, WaveVectorHash> seen;
    for (const auto& a : sv)
      for (const auto& b : sw) {
        const WaveVector k = a.k + b.k;
        if (k.is_canonical()) seen.emplace(k, 1);
      }
    out.reserve(seen.size());
    for (const auto& [k, unused] : seen) out.push_back(k);
    std::sort(out.begin(), out.end());
  }
  return out;
}

void require_same_dim(const SpectralField& v, const SpectralField& w) {
  if (v.dim() != w.dim()) {
    throw std::invalid_argument("bilinear_p: dimension mismatch (" + std::to_string(v.dim()) +
                                " vs " + std::to_string(w.dim()) + ")");
  }
}

}  // namespace

SpectralField bilinear_p(const SpectralField& v, const SpectralField& w) {
  require_same_dim(v, w);
  const int dim = v.dim();
  const auto d = static_cast<std::size_t>(dim);
  if (v.empty() || w.empty()) return SpectralField(dim);

  const auto sv = full_support(v);
  const auto sw = full_support(w);
  const SupportIndex w_index(w);
  std::vector<WaveVector> modes = sum_support(sv, sw, dim);
  std::vector<Complex> coeffs(modes.size() * d);
  const double pref = fourier_prefactor(dim);
  const auto n_out = static_cast<std::ptrdiff_t>(modes.size());

#pragma omp parallel for schedule(dynamic, 16)
  for (std::ptrdiff_t m = 0; m < n_out; ++m) {
    const WaveVector& k = modes[static_cast<std::size_t>(m)];
    CVec acc{};
    for (const auto& a : sv) {
      const WaveVector j = k - a.k;
      const std::int64_t hit = w_index.lookup(j);
      if (hit == 0) continue;
      const auto wi = static_cast<std::size_t>(std::abs(hit) - 1);
      const auto vc = v.coeff(a.index);
      const auto wc = w.coeff(wi);
      Complex vj = 0.0;
      for (int c = 0; c < dim; ++c) vj += (a.conj ? std::conj(vc[c]) : vc[c]) * static_cast<double>(j[c]);
      const Complex f = kI * vj;
      for (int c = 0; c < dim; ++c) acc[c] += f * (hit < 0 ? std::conj(wc[c]) : wc[c]);
    }
    std::span<Complex> out(coeffs.data() + static_cast<std::size_t>(m) * d, d);
    for (std::size_t c = 0; c < d; ++c) out[c] = acc[c] * pref;
    leray_project_mode(k, out);
    for (auto& z : out) z = -z;
  }
  return SpectralField::from_sorted_unchecked(dim, std::move(modes), std::move(coeffs));
}

SpectralField bilinear_p_reference(const SpectralField& v, const SpectralField& w) {
  require_same_dim(v, w);
  const int dim = v.dim();
  std::map<WaveVector, CVec> acc;
  for (const auto& a : full_support(v)) {
    const auto vc = v.coeff(a.index);
    for (const auto& b : full_support(w)) {
      const WaveVector k = a.k + b.k;
      if (k.is_zero()) continue;
      const auto wc = w.coeff(b.index);
      Complex vj = 0.0;
      for (int c = 0; c < dim; ++c) vj += (a.conj ? std::conj(vc[c]) : vc[c]) * static_cast<double>(b.k[c]);
      CVec& slot = acc[k];
      for (int c = 0; c < dim; ++c) slot[c] += kI * vj * (b.conj ? std::conj(wc[c]) : wc[c]);
    }
  }
  const double pref = fourier_prefactor(dim);
  std::vector<WaveVector> modes;
  std::vector<Complex> coeffs;
  for (auto& [k, c] : acc) {
    if (!k.is_canonical()) continue;
    std::span<Complex> out(c.data(), static_cast<std::size_t>(dim));
    for (auto& z : out) z *= pref;
    leray_project_mode(k, out);
    modes.push_back(k);
    for (auto& z : out) coeffs.push_back(-z);
  }
  return SpectralField::from_sorted_unchecked(dim, std::move(modes), std::move(coeffs));
}

int smooth_fft_size(int n) {
  for (int m = std::max(n, 1);; ++m) {
    int r = m;
    for (int p : {2, 3, 5})
      while (r % p == 0) r /= p;
    if (r == 1) return m;
  }
}

struct DealiasedProduct::Plans {
  fftw_complex* buf = nullptr;
  fftw_plan forward = nullptr;
  fftw_plan backward = nullptr;
  std::vector<double> vphys;  // dim arrays of points_ each
  std::vector<double> wphys;
  std::vector<double> prod;   // two product arrays
  std::vector<Complex> nl;    // output accumulation
  ~Plans() {
    if (forward) fftw_destroy_plan(forward);
    if (backward) fftw_destroy_plan(backward);
    if (buf) fftw_free(buf);
  }
};

DealiasedProduct::DealiasedProduct(int dim, int input_cutoff, int output_cutoff)
    : dim_(dim), in_cut_(input_cutoff), out_cut_(output_cutoff) {
  if (input_cutoff < 0 || output_cutoff < 0) {
    throw std::invalid_argument("DealiasedProduct: cutoffs must be nonnegative");
  }
  in_modes_ = cube_modes(dim, input_cutoff);
  out_modes_ = cube_modes(dim, output_cutoff);
  n_ = smooth_fft_size(2 * input_cutoff + output_cutoff + 1);
  points_ = 1;
  for (int i = 0; i < dim; ++i) points_ *= static_cast<std::size_t>(n_);
  for (const auto& k : in_modes_) in_index_.push_back(grid_index(k));
  for (const auto& k : out_modes_) {
    out_index_.push_back(grid_index(k));
    out_neg_index_.push_back(grid_index(-k));
  }

  plans_ = std::make_unique<Plans>();
  plans_->buf = fftw_alloc_complex(points_);
  std::vector<int> dims(static_cast<std::size_t>(dim), n_);
  // FFTW planning is not thread-safe.
#pragma omp critical(nsbound_fftw_plan)
  {
    plans_->forward = fftw_plan_dft(dim, dims.data(), plans_->buf, plans_->buf, FFTW_FORWARD,
                                    FFTW_ESTIMATE);
    plans_->backward = fftw_plan_dft(dim, dims.data(), plans_->buf, plans_->buf, FFTW_BACKWARD,
                                     FFTW_ESTIMATE);
  }
  const auto d = static_cast<std::size_t>(dim);
  plans_->vphys.resize(d * points_);
  plans_->wphys.resize(d * points_);
  plans_->prod.resize(2 * points_);
  plans_->nl.resize(out_modes_.size() * d);
}

DealiasedProduct::~DealiasedProduct() = default;

std::size_t DealiasedProduct::grid_index(const WaveVector& k) const {
  std::size_t idx = 0;
  for (int i = 0; i < dim_; ++i) idx = idx * static_cast<std::size_t>(n_) + static_cast<std::size_t>((k[i] % n_ + n_) % n_);
  return idx;
}

void DealiasedProduct::to_physical(std::span<const Complex> coeffs, int comp_a, int comp_b,
                                   double* phys_a, double* phys_b) {
  auto* buf = reinterpret_cast<Complex*>(plans_->buf);
  std::fill(buf, buf + points_, Complex{});
  const double pref = fourier_prefactor(dim_);
  const auto d = static_cast<std::size_t>(dim_);
  for (std::size_t m = 0; m < in_modes_.size(); ++m) {
    const Complex a = coeffs[m * d + static_cast<std::size_t>(comp_a)] * pref;
    const Complex b = comp_b >= 0 ? coeffs[m * d + static_cast<std::size_t>(comp_b)] * pref : Complex{};
    // Spectrum of a + i b at k and at -k (a, b real fields).
    buf[in_index_[m]] += a + kI * b;
    buf[grid_index(-in_modes_[m])] += std::conj(a) + kI * std::conj(b);
  }
  fftw_execute(plans_->backward);
  for (std::size_t p = 0; p < points_; ++p) {
    phys_a[p] = buf[p].real();
    if (phys_b) phys_b[p] = buf[p].imag();
  }
}

void DealiasedProduct::apply(std::span<const Complex> v, std::span<const Complex> w,
                             std::span<Complex> out) {
  const auto d = static_cast<std::size_t>(dim_);
  const bool same = w.empty();
  if (v.size() != in_modes_.size() * d || (!same && w.size() != v.size()) ||
      out.size() != out_modes_.size() * d) {
    throw std::invalid_argument("DealiasedProduct::apply: buffer sizes do not match the mode sets");
  }
  auto& P = *plans_;
  for (int c = 0; c < dim_; c += 2) {
    const int c2 = c + 1 < dim_ ? c + 1 : -1;
    to_physical(v, c, c2, &P.vphys[static_cast<std::size_t>(c) * points_],
                c2 >= 0 ? &P.vphys[static_cast<std::size_t>(c2) * points_] : nullptr);
    if (!same) {
      to_physical(w, c, c2, &P.wphys[static_cast<std::size_t>(c) * points_],
                  c2 >= 0 ? &P.wphys[static_cast<std::size_t>(c2) * points_] : nullptr);
    }
  }
  const std::vector<double>& wphys = same ? P.vphys : P.wphys;

  // Products T_{ji} = v_j w_i; (v . grad w)_i at k is sum_j i k_j T_{ji}(k).
  // For v = w only j <= i is formed and the symmetric partner reuses it.
  std::vector<std::pair<int, int>> products;
  for (int j = 0; j < dim_; ++j)
    for (int i = same ? j : 0; i < dim_; ++i) products.emplace_back(j, i);

  std::fill(P.nl.begin(), P.nl.end(), Complex{});
  auto* buf = reinterpret_cast<Complex*>(P.buf);
  const double scale = std::pow(2.0 * std::numbers::pi, 0.5 * dim_) / static_cast<double>(points_);
  for (std::size_t q = 0; q < products.size(); q += 2) {
    const bool pair = q + 1 < products.size();
    const auto [j1, i1] = products[q];
    const double* a1 = &P.vphys[static_cast<std::size_t>(j1) * points_];
    const double* b1 = &wphys[static_cast<std::size_t>(i1) * points_];
    const double* a2 = nullptr;
    const double* b2 = nullptr;
    if (pair) {
      a2 = &P.vphys[static_cast<std::size_t>(products[q + 1].first) * points_];
      b2 = &wphys[static_cast<std::size_t>(products[q + 1].second) * points_];
    }
    for (std::size_t p = 0; p < points_; ++p) {
      buf[p] = Complex(a1[p] * b1[p], pair ? a2[p] * b2[p] : 0.0);
    }
    fftw_execute(P.forward);
    for (std::size_t m = 0; m < out_modes_.size(); ++m) {
      const Complex f = buf[out_index_[m]];
      const Complex g = std::conj(buf[out_neg_index_[m]]);
      const Complex t1 = 0.5 * (f + g) * scale;
      const Complex t2 = -0.5 * kI * (f - g) * scale;
      const WaveVector& k = out_modes_[m];
      auto add = [&](int j, int i, Complex t) {
        P.nl[m * d + static_cast<std::size_t>(i)] += kI * static_cast<double>(k[j]) * t;
        if (same && i != j) P.nl[m * d + static_cast<std::size_t>(j)] += kI * static_cast<double>(k[i]) * t;
      };
      add(j1, i1, t1);
      if (pair) add(products[q + 1].first, products[q + 1].second, t2);
    }
  }
  for (std::size_t m = 0; m < out_modes_.size(); ++m) {
    std::span<Complex> o(out.data() + m * d, d);
    for (std::size_t c = 0; c < d; ++c) o[c] = P.nl[m * d + c];
    leray_project_mode(out_modes_[m], o);
    for (auto& z : o) z = -z;
  }
}

SpectralField DealiasedProduct::operator()(const SpectralField& v, const SpectralField& w) {
  if (v.dim() != dim_ || w.dim() != dim_) {
    throw std::invalid_argument("DealiasedProduct: dimension mismatch");
  }
  const auto d = static_cast<std::size_t>(dim_);
  auto densify = [&](const SpectralField& f) {
    if (f.max_abs_index() > in_cut_) {
      throw std::invalid_argument("DealiasedProduct: field has modes beyond the input cutoff");
    }
    std::vector<Complex> dense(in_modes_.size() * d);
    for (std::size_t i = 0; i < f.size(); ++i) {
      auto it = std::lower_bound(in_modes_.begin(), in_modes_.end(), f.modes()[i]);
      const auto m = static_cast<std::size_t>(it - in_modes_.begin());
      auto c = f.coeff(i);
      std::copy(c.begin(), c.end(), dense.begin() + static_cast<std::ptrdiff_t>(m * d));
    }
    return dense;
  };
  const auto vd = densify(v);
  std::vector<Complex> out(out_modes_.size() * d);
  if (&v == &w) {
    apply(vd, {}, out);
  } else {
    const auto wd = densify(w);
    apply(vd, wd, out);
  }
  return SpectralField::from_sorted_unchecked(dim_, out_modes_, std::move(out));
}

}  // namespace nsbound
