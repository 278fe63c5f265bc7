#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "nsbound/control_solver.hpp"
#include "nsbound/ode.hpp"
#include "nsbound/spectral_field.hpp"

namespace nsbound {

/// Forcing polynomial in time, f(t) = sum_j t^j f_j. An empty list is f = 0.
struct Forcing {
  std::vector<SpectralField> taylor;

  bool is_zero() const;
  SpectralField at(double t, int dim) const;
  /// Coefficient f_j, or the zero field when j is past the end.
  SpectralField coefficient(std::size_t j, int dim) const;
  int max_abs_index() const;
};

/// The Cauchy problem du/dt = nu Lap u + P(u, u) + f, u(0) = u0, plus the
/// orders to certify.
struct ProblemSpec {
  int dim = 3;
  double nu = 0.0;
  double n = 3.0;
  std::vector<double> orders;
  Forcing forcing;
  SpectralField u0;
  double T_max = 10.0;

  /// Throws ConfigError unless n > d/2 + 1, every p >= n, nu >= 0 and all
  /// fields have dimension d.
  void validate() const;
};

enum class Provenance { Zero, Galerkin, Taylor };
std::string to_string(Provenance p);

/// Samples of an approximate solution and of its time derivative.
struct ApproximantTrace {
  Provenance provenance = Provenance::Zero;
  int dim = 3;
  int resolution = 0;  ///< cube cutoff M (Galerkin) or Taylor order N
  double T_a = 0.0;    ///< domain end of the approximant
  bool ended_early = false;
  std::vector<double> t;
  std::vector<SpectralField> ua;
  std::vector<SpectralField> dua;
};

/// Uniform sample times on [0, horizon], `samples` >= 2 points.
std::vector<double> uniform_times(double horizon, std::size_t samples);

/// ua = 0 sampled at `times`; T_a = horizon.
ApproximantTrace zero_approximant(int dim, double horizon, const std::vector<double>& times);

struct GalerkinOptions {
  double rtol = 1e-10;
  /// Small enough that weakly excited high modes are integrated to relative
  /// accuracy; a larger floor leaks integration error into the high norms.
  double atol = 1e-16;
  std::size_t samples = 101;
  std::vector<double> times;  ///< overrides `samples` when nonempty
  double horizon = 0.0;       ///< 0 means spec.T_max
  ErrorNorm norm = ErrorNorm::Componentwise;
};

/// Galerkin system dua/dt = nu Lap ua + Pi_M P(ua, ua) + Pi_M f on the cube
/// |k|_inf <= M, started from Pi_M u0, by adaptive Dormand-Prince 5(4).
/// Derivative samples are the evaluated right-hand side. A step collapse
/// ends the trace early with T_a at the last accepted time.
ApproximantTrace galerkin_evolve(const ProblemSpec& spec, int M, const GalerkinOptions& opts = {});

/// Coefficients u_0..u_N of the time-Taylor approximant (nu = 0).
struct TaylorCoefficients {
  int order = 0;
  std::vector<SpectralField> u;
};

/// u_0 = u0, u_{j+1} = (sum_{i+l=j} P(u_i, u_l) + f_j) / (j + 1). With these
/// coefficients the powers t^0..t^{N-1} of the differential error vanish.
TaylorCoefficients taylor_coefficients(const ProblemSpec& spec, int N);

/// Coefficients e_0..e_{2N} of the differential error of sum_j t^j u_j
/// (nu = 0), a polynomial in t.
std::vector<SpectralField> taylor_residual(const ProblemSpec& spec, const TaylorCoefficients& c);

/// Samples ua(t) = sum t^j u_j and its derivative at `times`; T_a = horizon.
ApproximantTrace taylor_trace(const TaylorCoefficients& c, double horizon, const std::vector<double>& times);

/// e(ua) = dua/dt - nu Lap ua - P(ua, ua) - f(t), exactly (no truncation).
SpectralField differential_error(const SpectralField& ua, const SpectralField& dua, double t,
                                 const ProblemSpec& spec);

/// Estimator samples before interpolation.
struct EstimatorSamples {
  std::vector<double> t;
  std::vector<double> orders;           ///< sorted, every required order
  std::vector<std::vector<double>> eps; ///< [order][sample]
  std::vector<std::vector<double>> D;   ///< [order][sample]
  std::vector<double> delta;            ///< [order]
};

/// eps_q(t_i) = |e(ua)(t_i)|_q, delta_q = |ua(0) - u0|_q, D_q(t_i) = |ua(t_i)|_q
/// for q in {n, n+1} and each p, p+1. Samples are evaluated in parallel.
EstimatorSamples estimator_samples(const ApproximantTrace& trace, const ProblemSpec& spec);

/// Tautological estimators as linearly interpolated samplers.
EstimatorSet tautological_estimators(const ApproximantTrace& trace, const ProblemSpec& spec);
EstimatorSet make_estimator_set(const EstimatorSamples& s, const ProblemSpec& spec, double T_a);

}  // namespace nsbound
