#include "nsbound/approximants.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <memory>

#include "nsbound/bilinear.hpp"
#include "nsbound/errors.hpp"
#include "nsbound/ode.hpp"

namespace nsbound {

namespace {

std::string fmt(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%g", x);
  return buf;
}

/// Dense coefficients of `f` aligned with the sorted cube mode list; modes
/// outside the cube are dropped.
std::vector<Complex> densify(const SpectralField& f, const std::vector<WaveVector>& modes, int dim) {
  const auto d = static_cast<std::size_t>(dim);
  std::vector<Complex> dense(modes.size() * d);
  for (std::size_t i = 0; i < f.size(); ++i) {
    const auto it = std::lower_bound(modes.begin(), modes.end(), f.modes()[i]);
    if (it == modes.end() || *it != f.modes()[i]) continue;
    const auto m = static_cast<std::size_t>(it - modes.begin());
    const auto c = f.coeff(i);
    std::copy(c.begin(), c.end(), dense.begin() + static_cast<std::ptrdiff_t>(m * d));
  }
  return dense;
}

/// e = dua - nu Lap ua - P - f(t) given the product P = P(ua, ua).
SpectralField assemble_error(const SpectralField& ua, const SpectralField& dua, const SpectralField& P,
                             double t, const ProblemSpec& spec) {
  SpectralField e = field_axpy(spec.nu, laplacian(ua), field_scale(-1.0, dua));
  e = field_axpy(1.0, P, e);
  if (!spec.forcing.is_zero()) e = field_axpy(1.0, spec.forcing.at(t, spec.dim), e);
  return field_scale(-1.0, e);
}

}  // namespace

bool Forcing::is_zero() const {
  return std::all_of(taylor.begin(), taylor.end(), [](const SpectralField& f) { return f.max_abs_coeff() == 0.0; });
}

SpectralField Forcing::at(double t, int dim) const {
  SpectralField acc(dim);
  for (std::size_t j = taylor.size(); j-- > 0;) acc = field_axpy(1.0, taylor[j], field_scale(t, acc));
  return acc;
}

SpectralField Forcing::coefficient(std::size_t j, int dim) const {
  return j < taylor.size() ? taylor[j] : SpectralField(dim);
}

int Forcing::max_abs_index() const {
  int m = 0;
  for (const auto& f : taylor) m = std::max(m, f.max_abs_index());
  return m;
}

void ProblemSpec::validate() const {
  if (dim < 2 || dim > kMaxDim) throw ConfigError("dimension must lie in [2, " + std::to_string(kMaxDim) + "]");
  if (!(nu >= 0.0) || !std::isfinite(nu)) throw ConfigError("viscosity must be finite and nonnegative");
  if (!(n > 0.5 * dim + 1.0)) {
    throw ConfigError("base order n = " + fmt(n) + " must exceed d/2 + 1 = " + fmt(0.5 * dim + 1.0));
  }
  for (double p : orders) {
    if (!(p >= n) || !std::isfinite(p)) throw ConfigError("bound order p = " + fmt(p) + " must satisfy p >= n");
  }
  if (!(T_max > 0.0)) throw ConfigError("T_max must be positive");
  if (u0.dim() != dim) throw ConfigError("datum dimension does not match the problem dimension");
  for (const auto& f : forcing.taylor) {
    if (f.dim() != dim) throw ConfigError("forcing dimension does not match the problem dimension");
  }
}

std::string to_string(Provenance p) {
  switch (p) {
    case Provenance::Zero:
      return "zero";
    case Provenance::Galerkin:
      return "galerkin";
    case Provenance::Taylor:
      return "taylor";
  }
  return "unknown";
}

std::vector<double> uniform_times(double horizon, std::size_t samples) {
  if (!(horizon > 0.0) || !std::isfinite(horizon)) throw ConfigError("sample horizon must be finite and positive");
  const std::size_t m = std::max<std::size_t>(samples, 2);
  std::vector<double> t(m);
  for (std::size_t i = 0; i < m; ++i) t[i] = horizon * static_cast<double>(i) / static_cast<double>(m - 1);
  t.back() = horizon;
  return t;
}

ApproximantTrace zero_approximant(int dim, double horizon, const std::vector<double>& times) {
  ApproximantTrace tr;
  tr.provenance = Provenance::Zero;
  tr.dim = dim;
  tr.T_a = horizon;
  tr.t = times;
  tr.ua.assign(times.size(), SpectralField(dim));
  tr.dua.assign(times.size(), SpectralField(dim));
  return tr;
}

ApproximantTrace galerkin_evolve(const ProblemSpec& spec, int M, const GalerkinOptions& opts) {
  spec.validate();
  if (M < 1) throw ConfigError("Galerkin truncation M must be at least 1");
  const int dim = spec.dim;
  const auto d = static_cast<std::size_t>(dim);
  const double horizon = opts.horizon > 0.0 ? opts.horizon : spec.T_max;
  std::vector<double> times = opts.times.empty() ? uniform_times(horizon, opts.samples) : opts.times;
  std::sort(times.begin(), times.end());
  times.erase(std::unique(times.begin(), times.end()), times.end());
  if (times.front() != 0.0 || times.back() > horizon) throw ConfigError("Galerkin sample times must start at 0 and stay within the horizon");

  const auto modes = cube_modes(dim, M);
  const std::size_t nm = modes.size();
  std::vector<double> k2(nm);
  for (std::size_t m = 0; m < nm; ++m) k2[m] = static_cast<double>(modes[m].norm2());
  std::vector<std::vector<Complex>> f_dense;
  for (const auto& f : spec.forcing.taylor) f_dense.push_back(densify(f, modes, dim));

  auto prod = std::make_unique<DealiasedProduct>(dim, M, M);
  const double nu = spec.nu;
  const OdeRhs rhs = [&](double t, std::span<const double> y, std::span<double> dy) {
    const std::span<const Complex> v(reinterpret_cast<const Complex*>(y.data()), nm * d);
    const std::span<Complex> out(reinterpret_cast<Complex*>(dy.data()), nm * d);
    prod->apply(v, {}, out);
    for (std::size_t m = 0; m < nm; ++m) {
      for (std::size_t c = 0; c < d; ++c) {
        const std::size_t i = m * d + c;
        Complex f = 0.0;
        for (std::size_t j = f_dense.size(); j-- > 0;) f = f * t + f_dense[j][i];
        out[i] += -nu * k2[m] * v[i] + f;
      }
    }
  };

  ApproximantTrace tr;
  tr.provenance = Provenance::Galerkin;
  tr.dim = dim;
  tr.resolution = M;
  std::size_t next = 0;
  const auto as_field = [&](std::span<const double> y) {
    const auto* p = reinterpret_cast<const Complex*>(y.data());
    return SpectralField::from_sorted_unchecked(dim, modes, std::vector<Complex>(p, p + nm * d));
  };
  const OdeObserver observer = [&](double t, std::span<const double> y, std::span<const double> dy) {
    while (next < times.size() && times[next] <= t) {
      if (times[next] == t) {
        tr.t.push_back(t);
        tr.ua.push_back(as_field(y));
        tr.dua.push_back(as_field(dy));
      }
      ++next;
    }
    return true;
  };

  const auto u0 = densify(spec.u0, modes, dim);
  std::vector<double> y0(2 * nm * d);
  std::copy_n(reinterpret_cast<const double*>(u0.data()), y0.size(), y0.begin());
  OdeOptions o;
  o.rtol = opts.rtol;
  o.atol = opts.atol;
  o.norm = opts.norm;
  const OdeResult res = integrate_dopri45(rhs, 0.0, std::move(y0), times.back(), times, observer, o);
  if (res.status == OdeStatus::Completed) {
    tr.T_a = horizon;
  } else {
    tr.ended_early = true;
    tr.T_a = tr.t.empty() ? 0.0 : tr.t.back();
  }
  return tr;
}

TaylorCoefficients taylor_coefficients(const ProblemSpec& spec, int N) {
  spec.validate();
  if (spec.nu != 0.0) throw ConfigError("the time-Taylor approximant requires nu = 0");
  if (N < 0) throw ConfigError("Taylor order N must be nonnegative");
  TaylorCoefficients c;
  c.order = N;
  c.u.push_back(spec.u0);
  for (int j = 0; j < N; ++j) {
    SpectralField acc = spec.forcing.coefficient(static_cast<std::size_t>(j), spec.dim);
    for (int i = 0; i <= j; ++i) acc = field_axpy(1.0, bilinear_p(c.u[static_cast<std::size_t>(i)], c.u[static_cast<std::size_t>(j - i)]), acc);
    c.u.push_back(prune_zeros(field_scale(1.0 / (j + 1), acc)));
  }
  return c;
}

std::vector<SpectralField> taylor_residual(const ProblemSpec& spec, const TaylorCoefficients& c) {
  const int N = c.order;
  const int top = std::max(2 * N, static_cast<int>(spec.forcing.taylor.size()) - 1);
  std::vector<SpectralField> e;
  for (int m = 0; m <= top; ++m) {
    SpectralField acc = spec.forcing.coefficient(static_cast<std::size_t>(m), spec.dim);
    for (int i = std::max(0, m - N); i <= std::min(m, N); ++i) {
      acc = field_axpy(1.0, bilinear_p(c.u[static_cast<std::size_t>(i)], c.u[static_cast<std::size_t>(m - i)]), acc);
    }
    SpectralField em = field_scale(-1.0, acc);
    if (m + 1 <= N) em = field_axpy(m + 1.0, c.u[static_cast<std::size_t>(m + 1)], em);
    e.push_back(std::move(em));
  }
  return e;
}

ApproximantTrace taylor_trace(const TaylorCoefficients& c, double horizon, const std::vector<double>& times) {
  if (c.u.empty()) throw std::invalid_argument("taylor_trace: no coefficients");
  const int dim = c.u.front().dim();
  ApproximantTrace tr;
  tr.provenance = Provenance::Taylor;
  tr.dim = dim;
  tr.resolution = c.order;
  tr.T_a = horizon;
  tr.t = times;
  for (double t : times) {
    SpectralField ua(dim);
    SpectralField dua(dim);
    for (std::size_t j = c.u.size(); j-- > 0;) {
      ua = field_axpy(1.0, c.u[j], field_scale(t, ua));
      if (j > 0) dua = field_axpy(static_cast<double>(j), c.u[j], field_scale(t, dua));
    }
    tr.ua.push_back(std::move(ua));
    tr.dua.push_back(std::move(dua));
  }
  return tr;
}

SpectralField differential_error(const SpectralField& ua, const SpectralField& dua, double t,
                                 const ProblemSpec& spec) {
  if (ua.dim() != spec.dim || dua.dim() != spec.dim) {
    throw std::invalid_argument("differential_error: dimension mismatch");
  }
  return assemble_error(ua, dua, bilinear_p(ua, ua), t, spec);
}

EstimatorSamples estimator_samples(const ApproximantTrace& trace, const ProblemSpec& spec) {
  spec.validate();
  if (trace.t.empty() || trace.t.front() != 0.0) throw std::invalid_argument("estimator_samples: trace must start at t = 0");
  if (trace.dim != spec.dim) throw std::invalid_argument("estimator_samples: dimension mismatch");
  EstimatorSamples s;
  s.t = trace.t;
  s.orders = required_estimator_orders(spec.n, spec.orders);
  const std::size_t nq = s.orders.size();
  const std::size_t ns = trace.t.size();
  s.eps.assign(nq, std::vector<double>(ns));
  s.D.assign(nq, std::vector<double>(ns));

  const SpectralField datum_err = field_axpy(-1.0, spec.u0, trace.ua.front());
  for (double q : s.orders) s.delta.push_back(sobolev_norm(datum_err, q));

  const bool dense = trace.provenance == Provenance::Galerkin;
  std::exception_ptr failure;
#pragma omp parallel
  {
    std::unique_ptr<DealiasedProduct> prod;
    try {
      if (dense) prod = std::make_unique<DealiasedProduct>(spec.dim, trace.resolution, 2 * trace.resolution);
    } catch (...) {
#pragma omp critical(nsbound_estimator_failure)
      if (!failure) failure = std::current_exception();
    }
#pragma omp for schedule(dynamic, 1)
    for (std::ptrdiff_t ii = 0; ii < static_cast<std::ptrdiff_t>(ns); ++ii) {
      const auto i = static_cast<std::size_t>(ii);
      try {
        if (dense && !prod) continue;
        const SpectralField& ua = trace.ua[i];
        const SpectralField P = dense ? (*prod)(ua, ua) : bilinear_p(ua, ua);
        const SpectralField e = assemble_error(ua, trace.dua[i], P, trace.t[i], spec);
        for (std::size_t q = 0; q < nq; ++q) {
          s.eps[q][i] = sobolev_norm(e, s.orders[q]);
          s.D[q][i] = sobolev_norm(ua, s.orders[q]);
        }
      } catch (...) {
#pragma omp critical(nsbound_estimator_failure)
        if (!failure) failure = std::current_exception();
      }
    }
  }
  if (failure) std::rethrow_exception(failure);
  return s;
}

EstimatorSet make_estimator_set(const EstimatorSamples& s, const ProblemSpec& spec, double T_a) {
  EstimatorSet est;
  est.n = spec.n;
  est.orders = spec.orders;
  est.T_a = T_a;
  for (std::size_t q = 0; q < s.orders.size(); ++q) {
    est.by_order[s.orders[q]] = OrderEstimators{TimeSeries(s.t, s.eps[q]), s.delta[q], TimeSeries(s.t, s.D[q])};
  }
  est.validate();
  return est;
}

EstimatorSet tautological_estimators(const ApproximantTrace& trace, const ProblemSpec& spec) {
  return make_estimator_set(estimator_samples(trace, spec), spec, trace.T_a);
}

}  // namespace nsbound
