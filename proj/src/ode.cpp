#include "nsbound/ode.hpp"

#include <algorithm>
#include <cmath>

namespace nsbound {

namespace {

// Dormand-Prince 5(4) tableau.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192, a75 = -2187.0 / 6784,
                 a76 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                 e6 = 22.0 / 525, e7 = -1.0 / 40;

bool all_finite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

double scaled_norm(std::span<const double> e, std::span<const double> y0, std::span<const double> y1,
                   const OdeOptions& o) {
  if (o.norm == ErrorNorm::Global) {
    double se = 0.0, s0 = 0.0, s1 = 0.0;
    for (std::size_t i = 0; i < e.size(); ++i) {
      se += e[i] * e[i];
      s0 += y0[i] * y0[i];
      s1 += y1[i] * y1[i];
    }
    return std::sqrt(se) / (o.atol + o.rtol * std::sqrt(std::max(s0, s1)));
  }
  double s = 0.0;
  for (std::size_t i = 0; i < e.size(); ++i) {
    const double sc = o.atol + o.rtol * std::max(std::abs(y0[i]), std::abs(y1[i]));
    s += (e[i] / sc) * (e[i] / sc);
  }
  return e.empty() ? 0.0 : std::sqrt(s / static_cast<double>(e.size()));
}

/// Initial step selection after Hairer, Norsett & Wanner (II.4).
double initial_step(const OdeRhs& rhs, double t0, std::span<const double> y0,
                    std::span<const double> f0, double span, const OdeOptions& o) {
  const std::size_t n = y0.size();
  const double d0 = scaled_norm(y0, y0, y0, o);
  const double d1 = scaled_norm(f0, y0, y0, o);
  double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 * span : 0.01 * d0 / d1;
  h0 = std::min(h0, span);
  std::vector<double> y1(n), f1(n), diff(n);
  for (std::size_t i = 0; i < n; ++i) y1[i] = y0[i] + h0 * f0[i];
  rhs(t0 + h0, y1, f1);
  if (!all_finite(f1)) return h0 * 1e-3;
  for (std::size_t i = 0; i < n; ++i) diff[i] = (f1[i] - f0[i]) / h0;
  const double d2 = scaled_norm(diff, y0, y0, o);
  const double m = std::max(d1, d2);
  const double h1 = m <= 1e-15 ? std::max(1e-6 * span, h0 * 1e-3) : std::pow(0.01 / m, 1.0 / 5.0);
  return std::min({100.0 * h0, h1, span});
}

}  // namespace

OdeResult integrate_dopri45(const OdeRhs& rhs, double t0, std::vector<double> y0, double t_end,
                            std::span<const double> stops, const OdeObserver& observer,
                            const OdeOptions& opts) {
  const std::size_t n = y0.size();
  OdeResult res;
  res.t = t0;
  res.y = std::move(y0);
  auto& y = res.y;
  double t = t0;
  const double span = t_end - t0;
  const double min_step = opts.min_step > 0.0 ? opts.min_step : 1e-14 * std::abs(span);

  std::vector<double> k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), ytmp(n), ynew(n), err(n);
  rhs(t, y, k1);
  if (!all_finite(k1)) {
    res.status = OdeStatus::NonFiniteRhs;
    return res;
  }
  if (observer && !observer(t, y, k1)) {
    res.status = OdeStatus::StoppedByObserver;
    return res;
  }
  if (span <= 0.0) return res;

  std::vector<double> targets;
  for (double s : stops)
    if (s > t0 && s < t_end) targets.push_back(s);
  targets.push_back(t_end);
  std::sort(targets.begin(), targets.end());
  targets.erase(std::unique(targets.begin(), targets.end()), targets.end());
  std::size_t next = 0;

  double h = opts.initial_step > 0.0 ? opts.initial_step : initial_step(rhs, t, y, k1, span, opts);
  bool last_rejected = false;

  while (next < targets.size()) {
    if (res.accepted + res.rejected >= opts.max_steps) {
      res.status = OdeStatus::MaxSteps;
      return res;
    }
    h = std::min(h, opts.max_step);
    if (opts.step_limit) h = std::min(h, opts.step_limit(t, y, k1));
    const double target = targets[next];
    const double h_free = h;
    bool lands = false;
    if (t + h >= target || target - (t + h) < min_step) {
      h = target - t;
      lands = true;
    }
    if (h < min_step && !lands) {
      res.status = OdeStatus::StepCollapse;
      return res;
    }

    for (std::size_t i = 0; i < n; ++i) ytmp[i] = y[i] + h * a21 * k1[i];
    rhs(t + c2 * h, ytmp, k2);
    for (std::size_t i = 0; i < n; ++i) ytmp[i] = y[i] + h * (a31 * k1[i] + a32 * k2[i]);
    rhs(t + c3 * h, ytmp, k3);
    for (std::size_t i = 0; i < n; ++i) ytmp[i] = y[i] + h * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
    rhs(t + c4 * h, ytmp, k4);
    for (std::size_t i = 0; i < n; ++i)
      ytmp[i] = y[i] + h * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
    rhs(t + c5 * h, ytmp, k5);
    for (std::size_t i = 0; i < n; ++i)
      ytmp[i] = y[i] + h * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] + a65 * k5[i]);
    const double t_new = lands ? target : t + h;
    rhs(t_new, ytmp, k6);
    for (std::size_t i = 0; i < n; ++i)
      ynew[i] = y[i] + h * (a71 * k1[i] + a73 * k3[i] + a74 * k4[i] + a75 * k5[i] + a76 * k6[i]);
    rhs(t_new, ynew, k7);
    for (std::size_t i = 0; i < n; ++i)
      err[i] = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);

    double e = scaled_norm(err, y, ynew, opts);
    if (!std::isfinite(e) || !all_finite(ynew) || !all_finite(k7)) e = std::numeric_limits<double>::infinity();

    if (e <= 1.0) {
      t = t_new;
      y.swap(ynew);
      k1.swap(k7);
      res.t = t;
      ++res.accepted;
      if (lands) ++next;
      if (observer && !observer(t, y, k1)) {
        res.status = OdeStatus::StoppedByObserver;
        return res;
      }
      double fac = e == 0.0 ? 5.0 : std::min(5.0, std::max(0.2, 0.9 * std::pow(e, -0.2)));
      if (last_rejected) fac = std::min(fac, 1.0);
      // A step shortened to land on a stop should not shrink the next one.
      h = lands ? std::max(h * fac, std::min(h_free, h_free * fac)) : h * fac;
      last_rejected = false;
    } else {
      ++res.rejected;
      const double fac = std::isfinite(e) ? std::max(0.2, 0.9 * std::pow(e, -0.2)) : 0.2;
      h *= std::min(fac, 1.0);
      last_rejected = true;
      if (h < min_step) {
        res.status = OdeStatus::StepCollapse;
        return res;
      }
    }
  }
  res.status = OdeStatus::Completed;
  return res;
}

}  // namespace nsbound
