#pragma once

#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <vector>

namespace nsbound {

enum class OdeStatus {
  Completed,          ///< reached t_end
  StoppedByObserver,  ///< observer returned false
  StepCollapse,       ///< step size fell below min_step
  NonFiniteRhs,       ///< right-hand side non-finite at an accepted state
  MaxSteps,
};

enum class ErrorNorm {
  Componentwise,  ///< RMS of err_i / (atol + rtol max(|y_i|, |y_new_i|))
  Global,         ///< |err|_2 / (atol + rtol max(|y|_2, |y_new|_2))
};

using OdeRhs = std::function<void(double t, std::span<const double> y, std::span<double> dy)>;

/// Called at the initial point and after every accepted step with the
/// state and its derivative there; returning false stops the integration.
using OdeObserver =
    std::function<bool(double t, std::span<const double> y, std::span<const double> dy)>;

/// Optional cap on the next step size given the current state.
using StepLimit = std::function<double(double t, std::span<const double> y, std::span<const double> dy)>;

struct OdeOptions {
  double rtol = 1e-10;
  double atol = 1e-14;
  double initial_step = 0.0;  ///< 0 selects a step automatically
  double min_step = 0.0;      ///< absolute; 0 means 1e-14 * |t_end - t0|
  double max_step = std::numeric_limits<double>::infinity();
  std::size_t max_steps = 50'000'000;
  ErrorNorm norm = ErrorNorm::Componentwise;
  StepLimit step_limit;
};

struct OdeResult {
  OdeStatus status = OdeStatus::Completed;
  double t = 0.0;         ///< last accepted time
  std::vector<double> y;  ///< state at t
  std::size_t accepted = 0;
  std::size_t rejected = 0;
};

/// Adaptive Dormand-Prince 5(4) with FSAL and local extrapolation. Every
/// time in `stops` inside (t0, t_end] is landed on exactly.
OdeResult integrate_dopri45(const OdeRhs& rhs, double t0, std::vector<double> y0, double t_end,
                            std::span<const double> stops, const OdeObserver& observer,
                            const OdeOptions& opts = {});

}  // namespace nsbound
