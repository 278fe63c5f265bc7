#pragma once

#include <array>
#include <cmath>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <stdexcept>
#include <string>

namespace nsbound {

/// Largest torus dimension supported by the fixed-capacity lattice point.
inline constexpr int kMaxDim = 6;

/// A point of the integer lattice Z^d.
///
/// Components beyond `dim` are always zero, so the defaulted comparisons
/// and hashing only need to look at the full array.
struct WaveVector {
  int dim = 0;
  std::array<int, kMaxDim> c{};

  WaveVector() = default;
  explicit WaveVector(int d) : dim(d) {
    if (d < 1 || d > kMaxDim) {
      throw std::invalid_argument("WaveVector: dimension out of range: " + std::to_string(d));
    }
  }
  WaveVector(std::initializer_list<int> comps) : WaveVector(static_cast<int>(comps.size())) {
    int i = 0;
    for (int v : comps) c[i++] = v;
  }

  int operator[](int i) const { return c[i]; }
  int& operator[](int i) { return c[i]; }

  std::int64_t norm2() const {
    std::int64_t s = 0;
    for (int i = 0; i < dim; ++i) s += static_cast<std::int64_t>(c[i]) * c[i];
    return s;
  }
  double norm() const { return std::sqrt(static_cast<double>(norm2())); }
  int max_abs() const {
    int m = 0;
    for (int i = 0; i < dim; ++i) m = std::max(m, std::abs(c[i]));
    return m;
  }

  bool is_zero() const {
    for (int i = 0; i < dim; ++i)
      if (c[i] != 0) return false;
    return true;
  }

  /// Canonical half-lattice representative: the leading nonzero entry is positive.
  bool is_canonical() const {
    for (int i = 0; i < dim; ++i) {
      if (c[i] > 0) return true;
      if (c[i] < 0) return false;
    }
    return false;
  }

  WaveVector operator-() const {
    WaveVector r = *this;
    for (int i = 0; i < dim; ++i) r.c[i] = -c[i];
    return r;
  }
  WaveVector operator+(const WaveVector& o) const {
    WaveVector r = *this;
    for (int i = 0; i < dim; ++i) r.c[i] += o.c[i];
    return r;
  }
  WaveVector operator-(const WaveVector& o) const {
    WaveVector r = *this;
    for (int i = 0; i < dim; ++i) r.c[i] -= o.c[i];
    return r;
  }
  std::int64_t dot(const WaveVector& o) const {
    std::int64_t s = 0;
    for (int i = 0; i < dim; ++i) s += static_cast<std::int64_t>(c[i]) * o.c[i];
    return s;
  }

  /// The canonical member of {k, -k}.
  WaveVector canonical() const { return is_canonical() ? *this : -*this; }

  auto operator<=>(const WaveVector&) const = default;
  bool operator==(const WaveVector&) const = default;

  std::string to_string() const;
};

struct WaveVectorHash {
  std::size_t operator()(const WaveVector& k) const noexcept {
    std::uint64_t h = 0x9e3779b97f4a7c15ULL ^ static_cast<std::uint64_t>(k.dim);
    for (int i = 0; i < k.dim; ++i) {
      h ^= static_cast<std::uint64_t>(static_cast<std::uint32_t>(k.c[i])) + 0x9e3779b97f4a7c15ULL +
           (h << 6) + (h >> 2);
    }
    return static_cast<std::size_t>(h);
  }
};

inline std::string WaveVector::to_string() const {
  std::string s = "(";
  for (int i = 0; i < dim; ++i) {
    if (i) s += ",";
    s += std::to_string(c[i]);
  }
  return s + ")";
}

}  // namespace nsbound
