#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "nsbound/errors.hpp"
#include "nsbound/wave_vector.hpp"

namespace nsbound {

/// Truncation of the lattice sums and of the sup search.
struct LatticeTruncation {
  int sum_radius = 40;       ///< H: the h-sum runs over 0 < |h| <= H, h != k
  int sup_radius = 20;       ///< Kmax: the sup is searched over 0 < |k| <= Kmax
  double tail_margin = 1.1;  ///< multiplies the computed sup

  /// Throws unless H >= 2 Kmax, Kmax >= 1 and tail_margin >= 1.
  void validate() const;
  bool operator==(const LatticeTruncation&) const = default;
};

struct OrderPair {
  double p;
  double n;
  bool operator==(const OrderPair&) const = default;
};

/// |h ^ k| / |h| = |k| sin(angle(h, k)), the bound on the coupling of
/// modes h and k - h into mode k. Throws for h = 0.
double coupling_coefficient(const WaveVector& h, const WaveVector& k);

/// 4 |k|^{2p} sum_h C_{h,k}^2 / (|h|^p |k-h|^{n+1} + |h|^n |k-h|^{p+1})^2,
/// summed over the truncated ball in lexicographic order of h.
double kk_pn_at_k(const WaveVector& k, double p, double n, const LatticeTruncation& trunc);

/// 4 sum_h (|k|^p - |k-h|^p)^2 C_{h,k}^2 / (|h|^p |k-h|^n + |h|^n |k-h|^p)^2.
double gg_pn_at_k(const WaveVector& k, double p, double n, const LatticeTruncation& trunc);

/// Diagonal (p = n) forms with the summands simplified by hand; a separate
/// code path from kk_pn_at_k / gg_pn_at_k.
double kk_n_at_k(const WaveVector& k, double n, const LatticeTruncation& trunc);
double gg_n_at_k(const WaveVector& k, double n, const LatticeTruncation& trunc);

/// Result of the sup search for one order pair.
struct ConstantEntry {
  double p = 0.0;
  double n = 0.0;
  double K = 0.0;                ///< (2 pi)^{-d/2} sqrt(margin * sup_k KK(k))
  std::optional<double> G;       ///< present iff n > d/2 + 1
  double sup_K = 0.0;            ///< raw sup of the per-k function
  double sup_G = 0.0;
  WaveVector argmax_K;
  WaveVector argmax_G;
  bool plateau_K = false;        ///< running max grew < 0.1% over the outer third
  bool plateau_G = false;
};

/// Empirical upper estimates of the tame inequality constants. They are not
/// certified: the lattice tails beyond the truncation are not bounded.
struct ConstantTable {
  int dim = 0;
  LatticeTruncation trunc;
  std::vector<ConstantEntry> entries;

  const ConstantEntry* find(double p, double n) const;
  const ConstantEntry& entry(double p, double n) const;  ///< throws if missing
  double K(double p, double n) const { return entry(p, n).K; }
  double G(double p, double n) const;                    ///< throws if absent
  double K_n(double n) const { return K(n, n); }
  double G_n(double n) const { return G(n, n); }
  bool all_plateaued() const;
};

/// Canonical sup-search points: k_1 >= k_2 >= ... >= k_d >= 0, 0 < |k| <= Kmax,
/// ordered by |k| then lexicographically. Both per-k functions are
/// invariant under coordinate permutations and sign flips, which map the
/// truncated h-ball onto itself, so these points cover the whole sup.
std::vector<WaveVector> sup_search_points(int dim, int sup_radius);

/// Parallel kernel: per-k evaluations run concurrently over the search
/// points with tabulated lattice powers; the h-sum order is fixed.
ConstantTable compute_constants(int dim, std::span<const OrderPair> pairs,
                                const LatticeTruncation& trunc);

/// Serial reference built on kk_pn_at_k / gg_pn_at_k; bit-identical to
/// compute_constants.
ConstantTable compute_constants_reference(int dim, std::span<const OrderPair> pairs,
                                          const LatticeTruncation& trunc);

struct DiagonalConstants {
  double K_n = 0.0;
  double G_n = 0.0;
};

/// K_n, G_n from the dedicated diagonal formulas (serial).
DiagonalConstants diagonal_constants(int dim, double n, const LatticeTruncation& trunc);

/// Cache file name for one (d, p, n, truncation) key.
std::string constants_cache_name(int dim, double p, double n, const LatticeTruncation& trunc);

/// Serialization of one table entry in the cache-file layout
/// {d, p, n, H, Kmax, tail_margin, K_pn, G_pn, argmax_k, plateau, ...}.
std::string constant_entry_to_json(int dim, const LatticeTruncation& trunc, const ConstantEntry& e);
ConstantEntry constant_entry_from_json(const std::string& text, int& dim, LatticeTruncation& trunc);

/// Reads whatever entries for `pairs` exist under `dir`, computes the rest
/// (unless `allow_compute` is false, in which case a missing entry throws
/// ConstantsUnavailable) and writes new entries back.
ConstantTable load_or_compute_constants(int dim, std::span<const OrderPair> pairs,
                                        const LatticeTruncation& trunc,
                                        const std::optional<std::filesystem::path>& dir,
                                        bool allow_compute = true);

/// Loads a table from a single file holding one entry object or an array
/// of them.
ConstantTable load_constants_file(const std::filesystem::path& path);

}  // namespace nsbound
