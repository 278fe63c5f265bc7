#include "nsbound/tame_constants.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "nsbound/spectral_field.hpp"

namespace nsbound {

namespace {

using json = nlohmann::json;

void check_orders(int dim, double p, double n) {
  if (!(p >= n)) {
    throw std::invalid_argument("tame constants require p >= n (p=" + std::to_string(p) +
                                ", n=" + std::to_string(n) + ")");
  }
  if (!(n > 0.5 * dim)) {
    throw std::invalid_argument("tame constants require n > d/2 (n=" + std::to_string(n) +
                                ", d=" + std::to_string(dim) + ")");
  }
}

bool has_kato_constant(int dim, double n) { return n > 0.5 * dim + 1.0; }

/// Nonzero lattice points of the ball |h| <= H in lexicographic order.
std::vector<WaveVector> ball_points(int dim, int radius) {
  std::vector<WaveVector> out;
  const std::int64_t r2 = static_cast<std::int64_t>(radius) * radius;
  WaveVector h(dim);
  for (int i = 0; i < dim; ++i) h[i] = -radius;
  while (true) {
    if (!h.is_zero() && h.norm2() <= r2) out.push_back(h);
    int i = dim - 1;
    while (i >= 0 && h[i] == radius) {
      h[i] = -radius;
      --i;
    }
    if (i < 0) break;
    ++h[i];
  }
  return out;
}

/// Shared per-term arithmetic: kernel and reference must evaluate the same
/// expression tree to stay bit-identical.
struct Powers {
  double h_p, h_n;                 // |h|^p, |h|^n
  double m_n, m_p, m_n1, m_p1;     // |k-h|^{n}, ^{p}, ^{n+1}, ^{p+1}
};

inline double kk_term(double c2, const Powers& w) {
  const double den = w.h_p * w.m_n1 + w.h_n * w.m_p1;
  return c2 / (den * den);
}

inline double gg_term(double c2, double k_p, const Powers& w) {
  const double diff = k_p - w.m_p;
  const double den = w.h_p * w.m_n + w.h_n * w.m_p;
  return diff * diff * c2 / (den * den);
}

/// C_{h,k}^2 = (|h|^2 |k|^2 - (h.k)^2) / |h|^2 with an exact integer numerator.
inline double coupling_sq(std::int64_t h2, std::int64_t k2, std::int64_t hk) {
  return static_cast<double>(h2 * k2 - hk * hk) / static_cast<double>(h2);
}

struct PerK {
  double kk;
  double gg;
};

PerK per_k_direct(const WaveVector& k, double p, double n, const LatticeTruncation& trunc,
                  bool want_k, bool want_g) {
  const std::int64_t k2 = k.norm2();
  const double k_p = lattice_power(k2, p);
  double sk = 0.0;
  double sg = 0.0;
  for (const auto& h : ball_points(k.dim, trunc.sum_radius)) {
    if (h == k) continue;
    const std::int64_t h2 = h.norm2();
    const std::int64_t hk = h.dot(k);
    if (h2 * k2 - hk * hk == 0) continue;
    const std::int64_t m = (k - h).norm2();
    const double c2 = coupling_sq(h2, k2, hk);
    const Powers w{lattice_power(h2, p),      lattice_power(h2, n),       lattice_power(m, n),
                   lattice_power(m, p),       lattice_power(m, n + 1.0),  lattice_power(m, p + 1.0)};
    if (want_k) sk += kk_term(c2, w);
    if (want_g) sg += gg_term(c2, k_p, w);
  }
  return {4.0 * k_p * k_p * sk, 4.0 * sg};
}

struct SearchResult {
  double sup = 0.0;
  WaveVector argmax;
  bool plateau = false;
};

/// Running max over the search points (sorted by |k|); plateau means the
/// max over the whole shell exceeds the max over |k| <= 2 Kmax / 3 by less
/// than 0.1%.
SearchResult reduce(const std::vector<WaveVector>& ks, const std::vector<double>& values,
                    int sup_radius) {
  SearchResult r;
  double inner = 0.0;
  const double inner_r = 2.0 * sup_radius / 3.0;
  for (std::size_t i = 0; i < ks.size(); ++i) {
    if (values[i] > r.sup) {
      r.sup = values[i];
      r.argmax = ks[i];
    }
    if (ks[i].norm() <= inner_r) inner = std::max(inner, values[i]);
  }
  r.plateau = r.sup <= inner * (1.0 + 1e-3);
  return r;
}

ConstantEntry finish_entry(int dim, double p, double n, const LatticeTruncation& trunc,
                           const std::vector<WaveVector>& ks, const std::vector<double>& kk,
                           const std::vector<double>& gg) {
  const double pref = std::pow(2.0 * std::numbers::pi, -0.5 * dim);
  ConstantEntry e;
  e.p = p;
  e.n = n;
  const auto rk = reduce(ks, kk, trunc.sup_radius);
  e.sup_K = rk.sup;
  e.argmax_K = rk.argmax;
  e.plateau_K = rk.plateau;
  e.K = pref * std::sqrt(trunc.tail_margin * rk.sup);
  if (has_kato_constant(dim, n)) {
    const auto rg = reduce(ks, gg, trunc.sup_radius);
    e.sup_G = rg.sup;
    e.argmax_G = rg.argmax;
    e.plateau_G = rg.plateau;
    e.G = pref * std::sqrt(trunc.tail_margin * rg.sup);
  } else {
    e.plateau_G = true;
  }
  return e;
}

std::string fmt_g(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%g", x);
  return buf;
}

json wave_to_json(const WaveVector& k) {
  json a = json::array();
  for (int i = 0; i < k.dim; ++i) a.push_back(k[i]);
  return a;
}

WaveVector wave_from_json(const json& a) {
  WaveVector k(static_cast<int>(a.size()));
  for (int i = 0; i < k.dim; ++i) k[i] = a.at(static_cast<std::size_t>(i)).get<int>();
  return k;
}

json entry_json(int dim, const LatticeTruncation& trunc, const ConstantEntry& e) {
  json j;
  j["d"] = dim;
  j["p"] = e.p;
  j["n"] = e.n;
  j["H"] = trunc.sum_radius;
  j["Kmax"] = trunc.sup_radius;
  j["tail_margin"] = trunc.tail_margin;
  j["K_pn"] = e.K;
  j["G_pn"] = e.G ? json(*e.G) : json(nullptr);
  j["argmax_k"] = wave_to_json(e.G ? e.argmax_G : e.argmax_K);
  j["plateau"] = e.plateau_K && e.plateau_G;
  j["argmax_k_K"] = wave_to_json(e.argmax_K);
  j["sup_KK"] = e.sup_K;
  j["sup_GG"] = e.sup_G;
  j["plateau_K"] = e.plateau_K;
  j["plateau_G"] = e.plateau_G;
  j["label"] = "empirical upper estimate (truncated lattice sums, no tail bound)";
  return j;
}

ConstantEntry entry_from(const json& j, int& dim, LatticeTruncation& trunc) {
  dim = j.at("d").get<int>();
  trunc.sum_radius = j.at("H").get<int>();
  trunc.sup_radius = j.at("Kmax").get<int>();
  trunc.tail_margin = j.at("tail_margin").get<double>();
  ConstantEntry e;
  e.p = j.at("p").get<double>();
  e.n = j.at("n").get<double>();
  e.K = j.at("K_pn").get<double>();
  if (!j.at("G_pn").is_null()) e.G = j.at("G_pn").get<double>();
  const bool plateau = j.at("plateau").get<bool>();
  e.plateau_K = j.value("plateau_K", plateau);
  e.plateau_G = j.value("plateau_G", plateau);
  e.sup_K = j.value("sup_KK", 0.0);
  e.sup_G = j.value("sup_GG", 0.0);
  e.argmax_G = wave_from_json(j.at("argmax_k"));
  e.argmax_K = j.contains("argmax_k_K") ? wave_from_json(j.at("argmax_k_K")) : e.argmax_G;
  return e;
}

}  // namespace

void LatticeTruncation::validate() const {
  if (sup_radius < 1) throw std::invalid_argument("LatticeTruncation: Kmax must be >= 1");
  if (sum_radius < 2 * sup_radius) {
    throw std::invalid_argument("LatticeTruncation: sum radius H must be >= 2 Kmax");
  }
  if (!(tail_margin >= 1.0)) throw std::invalid_argument("LatticeTruncation: tail_margin must be >= 1");
}

double coupling_coefficient(const WaveVector& h, const WaveVector& k) {
  if (h.is_zero()) throw std::invalid_argument("coupling_coefficient: h must be nonzero");
  if (h.dim != k.dim) throw std::invalid_argument("coupling_coefficient: dimension mismatch");
  const std::int64_t h2 = h.norm2();
  return std::sqrt(coupling_sq(h2, k.norm2(), h.dot(k)));
}

double kk_pn_at_k(const WaveVector& k, double p, double n, const LatticeTruncation& trunc) {
  if (k.is_zero()) throw std::invalid_argument("kk_pn_at_k: k must be nonzero");
  check_orders(k.dim, p, n);
  return per_k_direct(k, p, n, trunc, true, false).kk;
}

double gg_pn_at_k(const WaveVector& k, double p, double n, const LatticeTruncation& trunc) {
  if (k.is_zero()) throw std::invalid_argument("gg_pn_at_k: k must be nonzero");
  check_orders(k.dim, p, n);
  return per_k_direct(k, p, n, trunc, false, true).gg;
}

double kk_n_at_k(const WaveVector& k, double n, const LatticeTruncation& trunc) {
  if (k.is_zero()) throw std::invalid_argument("kk_n_at_k: k must be nonzero");
  check_orders(k.dim, n, n);
  const double kn = std::pow(k.norm(), n);
  double s = 0.0;
  for (const auto& h : ball_points(k.dim, trunc.sum_radius)) {
    if (h == k) continue;
    const double c = coupling_coefficient(h, k);
    if (c == 0.0) continue;
    // 4 |k|^{2n} C^2 / (2 |h|^n |k-h|^{n+1})^2
    const double den = std::pow(h.norm(), n) * std::pow((k - h).norm(), n + 1.0);
    s += (c / den) * (c / den);
  }
  return kn * kn * s;
}

double gg_n_at_k(const WaveVector& k, double n, const LatticeTruncation& trunc) {
  if (k.is_zero()) throw std::invalid_argument("gg_n_at_k: k must be nonzero");
  check_orders(k.dim, n, n);
  const double kn = std::pow(k.norm(), n);
  double s = 0.0;
  for (const auto& h : ball_points(k.dim, trunc.sum_radius)) {
    if (h == k) continue;
    const double c = coupling_coefficient(h, k);
    if (c == 0.0) continue;
    // 4 (|k|^n - |k-h|^n)^2 C^2 / (2 |h|^n |k-h|^n)^2
    const double kmh = std::pow((k - h).norm(), n);
    const double t = (kn - kmh) * c / (std::pow(h.norm(), n) * kmh);
    s += t * t;
  }
  return s;
}

std::vector<WaveVector> sup_search_points(int dim, int sup_radius) {
  std::vector<WaveVector> out;
  const std::int64_t r2 = static_cast<std::int64_t>(sup_radius) * sup_radius;
  WaveVector k(dim);
  // Odometer over 0 <= k_i <= Kmax, keeping nonincreasing tuples.
  while (true) {
    bool sorted = true;
    for (int i = 0; i + 1 < dim; ++i) sorted = sorted && k[i] >= k[i + 1];
    if (sorted && !k.is_zero() && k.norm2() <= r2) out.push_back(k);
    int i = dim - 1;
    while (i >= 0 && k[i] == sup_radius) {
      k[i] = 0;
      --i;
    }
    if (i < 0) break;
    ++k[i];
  }
  std::stable_sort(out.begin(), out.end(), [](const WaveVector& a, const WaveVector& b) {
    return a.norm2() != b.norm2() ? a.norm2() < b.norm2() : a < b;
  });
  return out;
}

ConstantTable compute_constants(int dim, std::span<const OrderPair> pairs,
                                const LatticeTruncation& trunc) {
  trunc.validate();
  for (const auto& pr : pairs) check_orders(dim, pr.p, pr.n);
  ConstantTable table;
  table.dim = dim;
  table.trunc = trunc;

  const auto ks = sup_search_points(dim, trunc.sup_radius);
  const auto hs = ball_points(dim, trunc.sum_radius);
  const auto d = static_cast<std::size_t>(dim);
  std::vector<int> hflat(hs.size() * d);
  std::vector<std::int64_t> h2s(hs.size());
  for (std::size_t i = 0; i < hs.size(); ++i) {
    for (std::size_t c = 0; c < d; ++c) hflat[i * d + c] = hs[i][static_cast<int>(c)];
    h2s[i] = hs[i].norm2();
  }
  const std::int64_t r = trunc.sum_radius + trunc.sup_radius;
  const std::size_t mmax = static_cast<std::size_t>(r * r) + 1;

  for (const auto& pr : pairs) {
    const double p = pr.p;
    const double n = pr.n;
    const bool want_g = has_kato_constant(dim, n);
    std::vector<double> pw_p(mmax), pw_n(mmax), pw_n1(mmax), pw_p1(mmax);
    for (std::size_t m = 1; m < mmax; ++m) {
      const auto mm = static_cast<std::int64_t>(m);
      pw_p[m] = lattice_power(mm, p);
      pw_n[m] = lattice_power(mm, n);
      pw_n1[m] = lattice_power(mm, n + 1.0);
      pw_p1[m] = lattice_power(mm, p + 1.0);
    }
    std::vector<double> kk(ks.size()), gg(ks.size());
    const auto nk = static_cast<std::ptrdiff_t>(ks.size());

#pragma omp parallel for schedule(dynamic, 1)
    for (std::ptrdiff_t ik = 0; ik < nk; ++ik) {
      const WaveVector& k = ks[static_cast<std::size_t>(ik)];
      const std::int64_t k2 = k.norm2();
      const double k_p = pw_p[static_cast<std::size_t>(k2)];
      double sk = 0.0;
      double sg = 0.0;
      for (std::size_t ih = 0; ih < hs.size(); ++ih) {
        const int* h = &hflat[ih * d];
        std::int64_t hk = 0;
        std::int64_t m = 0;
        bool same = true;
        for (std::size_t c = 0; c < d; ++c) {
          const int kc = k[static_cast<int>(c)];
          hk += static_cast<std::int64_t>(h[c]) * kc;
          const std::int64_t diff = kc - h[c];
          m += diff * diff;
          same = same && diff == 0;
        }
        if (same) continue;
        const std::int64_t h2 = h2s[ih];
        if (h2 * k2 - hk * hk == 0) continue;
        const double c2 = coupling_sq(h2, k2, hk);
        const auto hi = static_cast<std::size_t>(h2);
        const auto mi = static_cast<std::size_t>(m);
        const Powers w{pw_p[hi], pw_n[hi], pw_n[mi], pw_p[mi], pw_n1[mi], pw_p1[mi]};
        sk += kk_term(c2, w);
        if (want_g) sg += gg_term(c2, k_p, w);
      }
      kk[static_cast<std::size_t>(ik)] = 4.0 * k_p * k_p * sk;
      gg[static_cast<std::size_t>(ik)] = 4.0 * sg;
    }
    table.entries.push_back(finish_entry(dim, p, n, trunc, ks, kk, gg));
  }
  return table;
}

ConstantTable compute_constants_reference(int dim, std::span<const OrderPair> pairs,
                                          const LatticeTruncation& trunc) {
  trunc.validate();
  for (const auto& pr : pairs) check_orders(dim, pr.p, pr.n);
  ConstantTable table;
  table.dim = dim;
  table.trunc = trunc;
  const auto ks = sup_search_points(dim, trunc.sup_radius);
  for (const auto& pr : pairs) {
    const bool want_g = has_kato_constant(dim, pr.n);
    std::vector<double> kk, gg;
    for (const auto& k : ks) {
      const PerK v = per_k_direct(k, pr.p, pr.n, trunc, true, want_g);
      kk.push_back(v.kk);
      gg.push_back(v.gg);
    }
    table.entries.push_back(finish_entry(dim, pr.p, pr.n, trunc, ks, kk, gg));
  }
  return table;
}

DiagonalConstants diagonal_constants(int dim, double n, const LatticeTruncation& trunc) {
  trunc.validate();
  check_orders(dim, n, n);
  const double pref = std::pow(2.0 * std::numbers::pi, -0.5 * dim);
  double sup_k = 0.0;
  double sup_g = 0.0;
  for (const auto& k : sup_search_points(dim, trunc.sup_radius)) {
    sup_k = std::max(sup_k, kk_n_at_k(k, n, trunc));
    if (has_kato_constant(dim, n)) sup_g = std::max(sup_g, gg_n_at_k(k, n, trunc));
  }
  return {pref * std::sqrt(trunc.tail_margin * sup_k), pref * std::sqrt(trunc.tail_margin * sup_g)};
}

const ConstantEntry* ConstantTable::find(double p, double n) const {
  for (const auto& e : entries)
    if (std::abs(e.p - p) <= 1e-12 && std::abs(e.n - n) <= 1e-12) return &e;
  return nullptr;
}

const ConstantEntry& ConstantTable::entry(double p, double n) const {
  const auto* e = find(p, n);
  if (!e) {
    throw ConstantsUnavailable("no tame constant entry for (p, n) = (" + fmt_g(p) + ", " +
                               fmt_g(n) + ")");
  }
  return *e;
}

double ConstantTable::G(double p, double n) const {
  const auto& e = entry(p, n);
  if (!e.G) {
    throw ConstantsUnavailable("G_pn undefined for n <= d/2 + 1 (n = " + fmt_g(n) + ")");
  }
  return *e.G;
}

bool ConstantTable::all_plateaued() const {
  return std::all_of(entries.begin(), entries.end(),
                     [](const ConstantEntry& e) { return e.plateau_K && e.plateau_G; });
}

std::string constants_cache_name(int dim, double p, double n, const LatticeTruncation& trunc) {
  return "constants_d" + std::to_string(dim) + "_p" + fmt_g(p) + "_n" + fmt_g(n) + "_H" +
         std::to_string(trunc.sum_radius) + "_K" + std::to_string(trunc.sup_radius) + "_m" +
         fmt_g(trunc.tail_margin) + ".json";
}

std::string constant_entry_to_json(int dim, const LatticeTruncation& trunc, const ConstantEntry& e) {
  return entry_json(dim, trunc, e).dump(2) + "\n";
}

ConstantEntry constant_entry_from_json(const std::string& text, int& dim, LatticeTruncation& trunc) {
  return entry_from(json::parse(text), dim, trunc);
}

ConstantTable load_or_compute_constants(int dim, std::span<const OrderPair> pairs,
                                        const LatticeTruncation& trunc,
                                        const std::optional<std::filesystem::path>& dir,
                                        bool allow_compute) {
  trunc.validate();
  ConstantTable table;
  table.dim = dim;
  table.trunc = trunc;
  std::vector<OrderPair> missing;
  for (const auto& pr : pairs) {
    std::optional<ConstantEntry> hit;
    if (dir) {
      std::ifstream in(*dir / constants_cache_name(dim, pr.p, pr.n, trunc));
      if (in) {
        std::stringstream ss;
        ss << in.rdbuf();
        int fd = 0;
        LatticeTruncation ft;
        try {
          ConstantEntry e = constant_entry_from_json(ss.str(), fd, ft);
          if (fd == dim && ft == trunc && e.p == pr.p && e.n == pr.n) hit = e;
        } catch (const std::exception&) {
          // unreadable cache entries are recomputed
        }
      }
    }
    if (hit) {
      table.entries.push_back(*hit);
    } else {
      missing.push_back(pr);
    }
  }
  if (!missing.empty()) {
    if (!allow_compute) {
      throw ConstantsUnavailable("tame constants for (p, n) = (" + fmt_g(missing.front().p) + ", " +
                                 fmt_g(missing.front().n) + ") are not cached and computation is disabled");
    }
    const ConstantTable fresh = compute_constants(dim, missing, trunc);
    for (const auto& e : fresh.entries) {
      table.entries.push_back(e);
      if (dir) {
        std::filesystem::create_directories(*dir);
        std::ofstream out(*dir / constants_cache_name(dim, e.p, e.n, trunc));
        out << constant_entry_to_json(dim, trunc, e);
      }
    }
  }
  // Keep the caller's pair order regardless of cache hits.
  std::vector<ConstantEntry> ordered;
  for (const auto& pr : pairs) ordered.push_back(table.entry(pr.p, pr.n));
  table.entries = std::move(ordered);
  return table;
}

ConstantTable load_constants_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConstantsUnavailable("cannot open constants file " + path.string());
  const json j = json::parse(in);
  ConstantTable table;
  auto add = [&](const json& e) {
    int d = 0;
    LatticeTruncation t;
    table.entries.push_back(entry_from(e, d, t));
    if (table.dim == 0) {
      table.dim = d;
      table.trunc = t;
    } else if (table.dim != d || !(table.trunc == t)) {
      throw ConstantsUnavailable("constants file mixes dimensions or truncations: " + path.string());
    }
  };
  if (j.is_array()) {
    for (const auto& e : j) add(e);
  } else {
    add(j);
  }
  return table;
}

}  // namespace nsbound
