#include "nsbound/certify.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <sstream>

#include "nsbound/datum.hpp"
#include "nsbound/errors.hpp"
#include "nsbound/field_io.hpp"

namespace nsbound {

using json = nlohmann::json;

namespace {

constexpr double kOrderTol = 1e-12;

std::string fmt(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%g", x);
  return buf;
}

std::string fmt17(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

/// JSON number, with non-finite values as the strings "inf", "-inf", "nan".
json num(double x) {
  if (std::isfinite(x)) return x;
  return fmt17(x);
}

template <class T>
T get_or(const json& j, const char* key, T fallback, const std::string& where) {
  if (!j.contains(key) || j.at(key).is_null()) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError("config key '" + where + key + "' has the wrong type");
  }
}

template <class T>
T require(const json& j, const char* key, const std::string& where) {
  if (!j.contains(key)) throw ConfigError("config key '" + where + key + "' is required");
  return get_or<T>(j, key, T{}, where);
}

double parse_number(const json& v, const std::string& key) {
  if (v.is_number()) return v.get<double>();
  if (v.is_string()) {
    const auto s = v.get<std::string>();
    if (s == "inf") return std::numeric_limits<double>::infinity();
  }
  throw ConfigError("config key '" + key + "' must be a number");
}

DatumSpec parse_datum(const json& j) {
  if (!j.is_object()) throw ConfigError("config key 'datum' must be an object");
  DatumSpec d;
  d.kind = get_or<std::string>(j, "kind", "explicit", "datum.");
  if (d.kind == "explicit") {
    if (!j.contains("modes")) throw ConfigError("config key 'datum.modes' is required for explicit data");
    d.field = json{{"modes", j.at("modes")}};
  } else if (d.kind == "file") {
    d.path = require<std::string>(j, "path", "datum.");
  } else if (d.kind == "taylor_green") {
    d.amplitude = get_or<double>(j, "amplitude", 1.0, "datum.");
  } else if (d.kind == "random_band") {
    d.amplitude = get_or<double>(j, "amplitude", 1.0, "datum.");
    d.band.k_min = get_or<double>(j, "k_min", 1.0, "datum.");
    d.band.k_max = get_or<double>(j, "k_max", 3.0, "datum.");
    if (!(d.band.k_max >= d.band.k_min) || !std::isfinite(d.band.k_max)) {
      throw ConfigError("datum band needs finite k_max >= k_min");
    }
    d.band.cube = get_or<int>(j, "cube", static_cast<int>(std::ceil(d.band.k_max)), "datum.");
    d.band.decay = get_or<double>(j, "decay", 0.0, "datum.");
    if (j.contains("seed")) d.seed = get_or<std::uint64_t>(j, "seed", 0, "datum.");
  } else {
    throw ConfigError("unknown datum kind '" + d.kind + "' (explicit, file, taylor_green, random_band)");
  }
  if (!(d.amplitude >= 0.0)) throw ConfigError("datum amplitude must be nonnegative");
  if (j.contains("norm")) {
    const auto& nj = j.at("norm");
    d.norm_order = require<double>(nj, "order", "datum.norm.");
    d.norm_value = require<double>(nj, "value", "datum.norm.");
    if (!(*d.norm_value >= 0.0)) throw ConfigError("datum.norm.value must be nonnegative");
  }
  if (j.contains("fraction_of_critical")) {
    d.fraction_of_critical = get_or<double>(j, "fraction_of_critical", 0.0, "datum.");
    if (!(*d.fraction_of_critical >= 0.0)) throw ConfigError("datum.fraction_of_critical must be nonnegative");
  }
  if (d.norm_order && d.fraction_of_critical) {
    throw ConfigError("datum.norm and datum.fraction_of_critical are mutually exclusive");
  }
  return d;
}

}  // namespace

CertifyConfig parse_config(const json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  CertifyConfig c;
  c.source = j;
  c.dim = get_or<int>(j, "dim", 3, "");
  if (c.dim < 2 || c.dim > kMaxDim) throw ConfigError("dim must lie in [2, " + std::to_string(kMaxDim) + "]");
  c.nu = require<double>(j, "nu", "");
  c.n = require<double>(j, "n", "");
  c.orders = get_or<std::vector<double>>(j, "orders", {}, "");
  if (j.contains("T_max")) c.T_max = parse_number(j.at("T_max"), "T_max");
  c.seed = get_or<std::uint64_t>(j, "seed", 0, "");
  c.out_dir = get_or<std::string>(j, "out_dir", "out", "");

  if (!(c.nu >= 0.0) || !std::isfinite(c.nu)) throw ConfigError("nu must be finite and nonnegative");
  if (!(c.n > 0.5 * c.dim + 1.0)) {
    throw ConfigError("n = " + fmt(c.n) + " must exceed d/2 + 1 = " + fmt(0.5 * c.dim + 1.0));
  }
  for (double p : c.orders) {
    if (!(p >= c.n)) throw ConfigError("bound order " + fmt(p) + " must be >= n");
  }
  if (!(c.T_max > 0.0) || !std::isfinite(c.T_max)) throw ConfigError("T_max must be finite and positive");

  if (!j.contains("datum")) throw ConfigError("config key 'datum' is required");
  c.datum = parse_datum(j.at("datum"));
  if (c.datum.kind == "taylor_green" && c.dim != 3) throw ConfigError("the Taylor-Green datum needs dim = 3");
  if (c.datum.fraction_of_critical && c.nu == 0.0) {
    throw ConfigError("datum.fraction_of_critical is relative to nu / G_n and needs nu > 0");
  }

  if (j.contains("forcing")) {
    const auto& f = j.at("forcing");
    if (f.is_string()) {
      if (f.get<std::string>() != "zero") throw ConfigError("forcing must be \"zero\" or {\"taylor\": [...]}");
    } else if (f.is_object() && f.contains("taylor") && f.at("taylor").is_array()) {
      for (const auto& fj : f.at("taylor")) c.forcing_taylor.push_back(fj);
    } else {
      throw ConfigError("forcing must be \"zero\" or {\"taylor\": [...]}");
    }
  }

  if (j.contains("approximant")) {
    const auto& a = j.at("approximant");
    if (!a.is_object()) throw ConfigError("config key 'approximant' must be an object");
    auto& s = c.approximant;
    s.kind = get_or<std::string>(a, "kind", "zero", "approximant.");
    s.M = get_or<int>(a, "M", 8, "approximant.");
    s.N = get_or<int>(a, "N", 2, "approximant.");
    if (a.contains("T_a")) s.T_a = parse_number(a.at("T_a"), "approximant.T_a");
    s.samples = get_or<std::size_t>(a, "samples", 101, "approximant.");
    s.rtol = get_or<double>(a, "rtol", 1e-10, "approximant.");
    if (s.kind != "zero" && s.kind != "galerkin" && s.kind != "taylor") {
      throw ConfigError("unknown approximant kind '" + s.kind + "' (zero, galerkin, taylor)");
    }
    if (s.kind == "galerkin" && s.M < 1) throw ConfigError("approximant.M must be >= 1");
    if (s.kind == "taylor") {
      if (c.nu != 0.0) throw ConfigError("the Taylor approximant requires nu = 0");
      if (s.N < 0) throw ConfigError("approximant.N must be >= 0");
      if (!s.T_a) throw ConfigError("the Taylor approximant needs approximant.T_a");
    }
    if (s.T_a && !(*s.T_a > 0.0)) throw ConfigError("approximant.T_a must be positive");
    if (s.samples < 2) throw ConfigError("approximant.samples must be >= 2");
    if (!(s.rtol > 0.0)) throw ConfigError("approximant.rtol must be positive");
  }

  if (j.contains("constants")) {
    const auto& k = j.at("constants");
    if (!k.is_object()) throw ConfigError("config key 'constants' must be an object");
    auto& s = c.constants;
    s.trunc.sum_radius = get_or<int>(k, "H", 40, "constants.");
    s.trunc.sup_radius = get_or<int>(k, "Kmax", 20, "constants.");
    s.trunc.tail_margin = get_or<double>(k, "tail_margin", 1.1, "constants.");
    if (k.contains("cache_path")) s.cache_path = get_or<std::string>(k, "cache_path", "", "constants.");
    if (k.contains("cache_dir")) s.cache_dir = get_or<std::string>(k, "cache_dir", "", "constants.");
    s.allow_compute = get_or<bool>(k, "allow_compute", true, "constants.");
  }
  try {
    c.constants.trunc.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }

  if (j.contains("validation")) {
    const auto& v = j.at("validation");
    if (!v.is_object()) throw ConfigError("config key 'validation' must be an object");
    ValidationSpec s;
    s.ref_M = get_or<int>(v, "ref_M", 16, "validation.");
    s.rtol = get_or<double>(v, "rtol", 1e-11, "validation.");
    s.atol = get_or<double>(v, "atol", 1e-17, "validation.");
    s.slack = get_or<double>(v, "slack", 1e-6, "validation.");
    c.validation = s;
  }
  return c;
}

CertifyConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("malformed config " + path.string() + ": " + e.what());
  }
  CertifyConfig c = parse_config(j);
  const auto base = path.parent_path();
  if (c.datum.kind == "file" && c.datum.path.is_relative()) c.datum.path = base / c.datum.path;
  if (c.constants.cache_path && c.constants.cache_path->is_relative()) c.constants.cache_path = base / *c.constants.cache_path;
  if (c.constants.cache_dir && c.constants.cache_dir->is_relative()) c.constants.cache_dir = base / *c.constants.cache_dir;
  return c;
}

std::vector<OrderPair> required_pairs(double n, const std::vector<double>& orders) {
  std::vector<OrderPair> out{{n, n}};
  const auto add = [&](OrderPair pr) {
    for (const auto& o : out)
      if (std::abs(o.p - pr.p) <= kOrderTol && std::abs(o.n - pr.n) <= kOrderTol) return;
    out.push_back(pr);
  };
  for (double p : orders) {
    add({p, p});
    add({p, n});
  }
  return out;
}

ConstantTable fetch_constants(const CertifyConfig& cfg) {
  const auto pairs = required_pairs(cfg.n, cfg.orders);
  const auto& cs = cfg.constants;
  if (cs.cache_path) {
    ConstantTable t;
    try {
      t = load_constants_file(*cs.cache_path);
    } catch (const json::exception& e) {
      throw ConstantsUnavailable("unreadable constants file " + cs.cache_path->string() + ": " + e.what());
    }
    if (t.dim != cfg.dim) throw ConstantsUnavailable("constants file is for another dimension");
    for (const auto& pr : pairs) {
      const ConstantEntry* e = t.find(pr.p, pr.n);
      if (!e || !e->G) {
        throw ConstantsUnavailable("constants file lacks the pair (p, n) = (" + fmt(pr.p) + ", " + fmt(pr.n) + ")");
      }
    }
    return t;
  }
  return load_or_compute_constants(cfg.dim, pairs, cs.trunc, cs.cache_dir, cs.allow_compute);
}

SpectralField build_datum(const CertifyConfig& cfg, const ConstantTable& table) {
  const DatumSpec& d = cfg.datum;
  SpectralField u0;
  if (d.kind == "explicit") {
    u0 = field_from_json(d.field, cfg.dim);
  } else if (d.kind == "file") {
    u0 = read_field(d.path, cfg.dim);
  } else if (d.kind == "taylor_green") {
    u0 = taylor_green(d.amplitude);
  } else {
    RandomFieldOptions o = d.band;
    o.l2_norm = d.amplitude;
    try {
      u0 = random_field(cfg.dim, o, d.seed.value_or(cfg.seed));
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
  }
  if (d.norm_order || d.fraction_of_critical) {
    const double order = d.norm_order.value_or(cfg.n);
    const double value = d.norm_value ? *d.norm_value : *d.fraction_of_critical * cfg.nu / table.G_n(cfg.n);
    if (sobolev_norm(u0, order) == 0.0) {
      if (value != 0.0) throw ConfigError("cannot rescale the zero datum to a nonzero norm");
    } else {
      u0 = scale_to_norm(u0, order, value);
    }
  }
  return u0;
}

Forcing build_forcing(const CertifyConfig& cfg) {
  Forcing f;
  for (const auto& fj : cfg.forcing_taylor) f.taylor.push_back(field_from_json(fj, cfg.dim));
  return f;
}

ValidationResult validate_against_reference(const ProblemSpec& spec, const ApproximantTrace& trace,
                                            const ControlSolution& sol, const ValidationSpec& vs) {
  if (vs.ref_M < 1) throw ConfigError("validation.ref_M must be >= 1");
  if (trace.provenance == Provenance::Galerkin && vs.ref_M <= trace.resolution) {
    throw ConfigError("validation.ref_M must exceed the approximant resolution M");
  }
  if (sol.t.empty()) throw std::invalid_argument("validate_against_reference: empty control grid");
  for (std::size_t i = 0; i < sol.t.size(); ++i) {
    if (i >= trace.t.size() || trace.t[i] != sol.t[i]) {
      throw std::invalid_argument("validate_against_reference: control grid is not a prefix of the trace grid");
    }
  }

  std::vector<SpectralField> ref;
  if (sol.t.size() == 1) {
    ref.push_back(truncate_cube(spec.u0, vs.ref_M));
  } else {
    GalerkinOptions go;
    go.rtol = vs.rtol;
    go.atol = vs.atol;
    go.times = sol.t;
    go.horizon = sol.t.back();
    ApproximantTrace r = galerkin_evolve(spec, vs.ref_M, go);
    if (r.ended_early || r.t.size() != sol.t.size()) {
      throw IntegratorFailure("reference Galerkin integration failed at t = " + fmt(r.T_a) +
                              " before the end of the control grid");
    }
    ref = std::move(r.ua);
  }

  ValidationResult out;
  out.spec = vs;
  std::vector<std::pair<double, const std::vector<double>*>> channels{{spec.n, &sol.R_n}};
  for (const auto& ob : sol.orders) channels.emplace_back(ob.p, &ob.R);

  const std::size_t ng = sol.t.size();
  for (const auto& [q, R] : channels) {
    OrderValidation ov;
    ov.q = q;
    ov.distance.assign(ng, 0.0);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t ii = 0; ii < static_cast<std::ptrdiff_t>(ng); ++ii) {
      const auto i = static_cast<std::size_t>(ii);
      ov.distance[i] = sobolev_norm(field_axpy(-1.0, trace.ua[i], ref[i]), q);
    }
    for (std::size_t i = 0; i < ng; ++i) {
      const double r = (*R)[i];
      const double ratio = r > 0.0 ? ov.distance[i] / r
                                   : (ov.distance[i] == 0.0 ? 0.0 : std::numeric_limits<double>::infinity());
      if (ratio > ov.max_ratio) {
        ov.max_ratio = ratio;
        ov.t_at_max = sol.t[i];
      }
    }
    out.orders.push_back(std::move(ov));
  }
  out.pass = std::all_of(out.orders.begin(), out.orders.end(),
                         [&](const OrderValidation& o) { return o.max_ratio <= 1.0 + vs.slack; });
  return out;
}

double CertificationReport::T_c() const {
  if (T_c_closed_form) return *T_c_closed_form;
  return control ? control->T_c : 0.0;
}

int CertificationReport::exit_code() const {
  switch (status) {
    case Status::Ok:
      return 0;
    case Status::ConfigError:
      return 2;
    case Status::ConstantsUnavailable:
      return 3;
    case Status::IntegratorFailure:
      return 4;
  }
  return 1;
}

CertificationReport run_certification(const CertifyConfig& cfg, const RunOptions& opts) {
  CertificationReport r;
  r.config = cfg;
  std::string stage;
  auto clock = std::chrono::steady_clock::now();
  const auto begin = [&](const char* name) {
    stage = name;
    clock = std::chrono::steady_clock::now();
  };
  const auto end = [&] {
    const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - clock).count();
    r.timings.push_back({stage, s});
  };
  const auto fail = [&](CertificationReport::Status st, const std::exception& e) {
    r.status = st;
    r.message = e.what();
    r.failed_stage = stage;
  };

  try {
    begin("constants");
    r.constants = fetch_constants(cfg);
    end();

    begin("datum");
    ProblemSpec spec;
    spec.dim = cfg.dim;
    spec.nu = cfg.nu;
    spec.n = cfg.n;
    spec.orders = cfg.orders;
    spec.T_max = cfg.T_max;
    spec.u0 = build_datum(cfg, *r.constants);
    spec.forcing = build_forcing(cfg);
    spec.validate();
    r.problem = spec;
    end();

    begin("approximant");
    const auto& as = cfg.approximant;
    const double horizon = std::min(as.T_a.value_or(cfg.T_max), cfg.T_max);
    if (as.kind == "zero") {
      r.trace = zero_approximant(cfg.dim, horizon, uniform_times(horizon, as.samples));
    } else if (as.kind == "galerkin") {
      GalerkinOptions go;
      go.rtol = as.rtol;
      go.samples = as.samples;
      go.horizon = horizon;
      r.trace = galerkin_evolve(spec, as.M, go);
      if (r.trace->t.size() < 2) throw IntegratorFailure("Galerkin integration failed before the first sample");
    } else {
      r.trace = taylor_trace(taylor_coefficients(spec, as.N), horizon, uniform_times(horizon, as.samples));
    }
    end();

    begin("estimators");
    r.estimators = estimator_samples(*r.trace, spec);
    const EstimatorSet est = make_estimator_set(*r.estimators, spec, r.trace->T_a);
    end();

    begin("control");
    GridPolicy grid;
    grid.times = r.trace->t;
    r.control = solve_control_system(est, *r.constants, cfg.nu, cfg.T_max, grid);
    if (as.kind == "zero" && spec.forcing.is_zero()) {
      r.T_c_closed_form = zero_tc(cfg.nu, r.constants->G_n(cfg.n), sobolev_norm(spec.u0, cfg.n));
    }
    end();

    if (opts.validate) {
      begin("validation");
      ValidationSpec vs = cfg.validation.value_or(ValidationSpec{});
      if (opts.ref_M) vs.ref_M = *opts.ref_M;
      r.validation = validate_against_reference(spec, *r.trace, *r.control, vs);
      end();
    }
  } catch (const ConstantsUnavailable& e) {
    fail(CertificationReport::Status::ConstantsUnavailable, e);
  } catch (const IntegratorFailure& e) {
    fail(CertificationReport::Status::IntegratorFailure, e);
  } catch (const std::invalid_argument& e) {
    fail(CertificationReport::Status::ConfigError, e);
  }
  return r;
}

namespace {

json truncation_json(const LatticeTruncation& t) {
  return {{"H", t.sum_radius}, {"Kmax", t.sup_radius}, {"tail_margin", t.tail_margin}};
}

json wave_json(const WaveVector& k) {
  json a = json::array();
  for (int i = 0; i < k.dim; ++i) a.push_back(k[i]);
  return a;
}

std::string status_name(CertificationReport::Status s) {
  switch (s) {
    case CertificationReport::Status::Ok:
      return "ok";
    case CertificationReport::Status::ConfigError:
      return "config_error";
    case CertificationReport::Status::ConstantsUnavailable:
      return "constants_unavailable";
    case CertificationReport::Status::IntegratorFailure:
      return "integrator_failure";
  }
  return "unknown";
}

}  // namespace

json report_json(const CertificationReport& r) {
  json j;
  j["status"] = status_name(r.status);
  j["exit_code"] = r.exit_code();
  if (r.status != CertificationReport::Status::Ok) {
    j["message"] = r.message;
    j["failed_stage"] = r.failed_stage;
  }
  json caveats = json::array();

  if (r.config) {
    const auto& c = *r.config;
    j["config"] = c.source;
    json orders = json::array();
    for (double p : c.orders) orders.push_back(p);
    j["problem"] = {{"dim", c.dim}, {"nu", c.nu},       {"n", c.n},
                    {"orders", orders}, {"T_max", c.T_max}, {"seed", c.seed},
                    {"forcing", c.forcing_taylor.empty() ? json("zero") : json("taylor")}};
    if (c.datum.kind == "taylor_green" || c.datum.kind == "random_band") {
      caveats.push_back("named datum '" + c.datum.kind + "' is a standard community definition, not taken from the analysis");
    }
  }
  if (r.problem) {
    json norms;
    std::vector<double> qs = required_estimator_orders(r.problem->n, r.problem->orders);
    for (double q : qs) norms[fmt(q)] = sobolev_norm(r.problem->u0, q);
    j["problem"]["datum_norms"] = norms;
    j["problem"]["datum_modes"] = r.problem->u0.size();
  }

  if (r.constants) {
    const auto& t = *r.constants;
    std::vector<const ConstantEntry*> es;
    for (const auto& e : t.entries) es.push_back(&e);
    std::sort(es.begin(), es.end(), [](const ConstantEntry* a, const ConstantEntry* b) {
      return a->n != b->n ? a->n < b->n : a->p < b->p;
    });
    json entries = json::array();
    for (const auto* e : es) {
      entries.push_back({{"p", e->p},
                         {"n", e->n},
                         {"K_pn", e->K},
                         {"G_pn", e->G ? json(*e->G) : json(nullptr)},
                         {"argmax_k_K", wave_json(e->argmax_K)},
                         {"argmax_k_G", wave_json(e->argmax_G)},
                         {"plateau_K", e->plateau_K},
                         {"plateau_G", e->plateau_G}});
    }
    j["constants"] = {{"label", "empirical upper estimates (truncated lattice sums, no tail bound)"},
                      {"dim", t.dim},
                      {"truncation", truncation_json(t.trunc)},
                      {"all_plateaued", t.all_plateaued()},
                      {"entries", entries}};
    caveats.push_back("constants are empirical upper estimates from truncated lattice sums; the tails are not bounded");
    if (!t.all_plateaued()) caveats.push_back("at least one constant's sup search did not plateau over the outer third of the search radius");
  }

  if (r.trace) {
    const auto& tr = *r.trace;
    j["approximant"] = {{"kind", to_string(tr.provenance)},
                        {"resolution", tr.resolution},
                        {"T_a", num(tr.T_a)},
                        {"ended_early", tr.ended_early},
                        {"samples", tr.t.size()}};
    if (tr.provenance == Provenance::Galerkin && r.config) j["approximant"]["rtol"] = r.config->approximant.rtol;
    if (tr.ended_early) caveats.push_back("the Galerkin integration ended early; T_a is the last sampled time");
  }

  if (r.estimators) {
    const auto& s = *r.estimators;
    json delta;
    json orders = json::array();
    for (std::size_t q = 0; q < s.orders.size(); ++q) {
      delta[fmt(s.orders[q])] = s.delta[q];
      orders.push_back(s.orders[q]);
    }
    j["estimators"] = {{"kind", "tautological"}, {"orders", orders}, {"delta", delta}, {"file", "estimators.csv"}};
    caveats.push_back("estimators are sampled and linearly interpolated between samples; between-sample rigor is heuristic");
  }

  if (r.control) {
    const auto& s = *r.control;
    const double tc = r.T_c();
    std::string certified;
    if (r.T_c_closed_form) {
      certified = std::isinf(*r.T_c_closed_form) ? "global" : "closed_form";
    } else if (s.blew_up) {
      certified = "until_blow_up";
    } else if (r.config && s.horizon >= r.config->T_max) {
      certified = "to_T_max";
    } else {
      certified = "to_T_a";
    }
    json used{{"K_n", s.K_n}, {"G_n", s.G_n}};
    json finals{{"R_n", s.R_n.empty() ? json(nullptr) : json(s.R_n.back())}};
    for (const auto& ob : s.orders) {
      used["orders"][fmt(ob.p)] = {{"K_p", ob.K_p}, {"G_p", ob.G_p}, {"G_pn", ob.G_pn}};
      finals[fmt(ob.p)] = ob.R.empty() ? json(nullptr) : json(ob.R.back());
    }
    j["control"] = {{"T_c", num(tc)},
                    {"T_c_integrated", num(s.T_c)},
                    {"certified", certified},
                    {"blew_up", s.blew_up},
                    {"stop_reason", s.stop_reason},
                    {"horizon", num(s.horizon)},
                    {"grid_points", s.t.size()},
                    {"constants_used", used},
                    {"final_bounds", finals},
                    {"tolerances", {{"ode_rtol", s.rtol}, {"ode_atol", s.atol}, {"quadrature_rtol", QuadratureOptions{}.rtol}}},
                    {"file", "bounds.csv"}};
    if (r.T_c_closed_form) j["control"]["T_c_closed_form"] = num(*r.T_c_closed_form);
    if (certified == "global") {
      caveats.push_back("T_c = inf from the closed form; bound curves are sampled up to T_max only");
    }
    if (s.blew_up) caveats.push_back("T_c is the last accepted integrator time before the blow-up cap (an under-estimate)");
  }

  if (r.validation) {
    const auto& v = *r.validation;
    json orders = json::array();
    for (const auto& o : v.orders) {
      orders.push_back({{"q", o.q}, {"max_ratio", num(o.max_ratio)}, {"t_at_max", o.t_at_max}});
    }
    j["validation"] = {{"ref_M", v.spec.ref_M},     {"rtol", v.spec.rtol}, {"atol", v.spec.atol},
                       {"slack", v.spec.slack},     {"orders", orders},    {"pass", v.pass},
                       {"label", "heuristic: the reference is itself a numerical Galerkin solution"}};
  }
  j["caveats"] = caveats;
  j["outputs"] = {{"report", "report.json"}, {"bounds", "bounds.csv"}, {"estimators", "estimators.csv"},
                  {"timings", "timings.json"}};
  return j;
}

std::string bounds_csv(const CertificationReport& r) {
  std::ostringstream out;
  out << "t,R_n";
  if (!r.control) {
    out << '\n';
    return out.str();
  }
  const auto& s = *r.control;
  for (const auto& ob : s.orders) out << ",R_" << fmt(ob.p) << ",A_" << fmt(ob.p);
  out << '\n';
  for (std::size_t i = 0; i < s.t.size(); ++i) {
    out << fmt17(s.t[i]) << ',' << fmt17(s.R_n[i]);
    for (const auto& ob : s.orders) out << ',' << fmt17(ob.R[i]) << ',' << fmt17(ob.A[i]);
    out << '\n';
  }
  return out.str();
}

std::string estimators_csv(const CertificationReport& r) {
  std::ostringstream out;
  out << 't';
  if (!r.estimators) {
    out << '\n';
    return out.str();
  }
  const auto& s = *r.estimators;
  for (double q : s.orders) out << ",eps_" << fmt(q) << ",D_" << fmt(q);
  out << '\n';
  for (std::size_t i = 0; i < s.t.size(); ++i) {
    out << fmt17(s.t[i]);
    for (std::size_t q = 0; q < s.orders.size(); ++q) out << ',' << fmt17(s.eps[q][i]) << ',' << fmt17(s.D[q][i]);
    out << '\n';
  }
  return out.str();
}

void emit_outputs(const CertificationReport& r, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const auto write = [&](const char* name, const std::string& text) {
    std::ofstream out(dir / name, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + (dir / name).string());
    out << text;
    if (!out) throw std::runtime_error("write failed: " + (dir / name).string());
  };
  write("report.json", report_json(r).dump(2) + "\n");
  write("bounds.csv", bounds_csv(r));
  write("estimators.csv", estimators_csv(r));
  json t;
  double total = 0.0;
  for (const auto& s : r.timings) {
    t[s.stage] = s.seconds;
    total += s.seconds;
  }
  t["total"] = total;
  write("timings.json", t.dump(2) + "\n");
}

}  // namespace nsbound
