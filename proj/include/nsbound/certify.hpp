#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "nsbound/approximants.hpp"
#include "nsbound/control_solver.hpp"
#include "nsbound/datum.hpp"
#include "nsbound/tame_constants.hpp"

namespace nsbound {

/// How the initial datum is built.
struct DatumSpec {
  std::string kind = "explicit";  ///< explicit | file | taylor_green | random_band
  nlohmann::json field;           ///< explicit modes
  std::filesystem::path path;     ///< file
  double amplitude = 1.0;         ///< taylor_green amplitude, random_band L2 norm
  RandomFieldOptions band;
  std::optional<std::uint64_t> seed;  ///< random_band; defaults to the run seed
  /// Optional rescaling: |u0|_{norm_order} = norm_value, or
  /// |u0|_n = fraction_of_critical * nu / G_n.
  std::optional<double> norm_order;
  std::optional<double> norm_value;
  std::optional<double> fraction_of_critical;
};

struct ApproximantSpec {
  std::string kind = "zero";  ///< zero | galerkin | taylor
  int M = 8;
  int N = 2;
  std::optional<double> T_a;
  std::size_t samples = 101;
  double rtol = 1e-10;
};

struct ConstantsSpec {
  LatticeTruncation trunc;
  std::optional<std::filesystem::path> cache_path;  ///< a single table file
  std::optional<std::filesystem::path> cache_dir;   ///< per-entry cache files
  bool allow_compute = true;
};

struct ValidationSpec {
  int ref_M = 16;
  double rtol = 1e-11;
  double atol = 1e-17;
  double slack = 1e-6;  ///< pass iff every ratio <= 1 + slack
};

struct CertifyConfig {
  int dim = 3;
  double nu = 0.0;
  double n = 3.0;
  std::vector<double> orders;
  DatumSpec datum;
  std::vector<nlohmann::json> forcing_taylor;  ///< empty means f = 0
  ApproximantSpec approximant;
  ConstantsSpec constants;
  double T_max = 10.0;
  std::uint64_t seed = 0;
  std::filesystem::path out_dir = "out";
  std::optional<ValidationSpec> validation;
  nlohmann::json source;  ///< the parsed config, echoed in the report
};

/// Parses and checks a config object. Throws ConfigError with a message
/// naming the offending key.
CertifyConfig parse_config(const nlohmann::json& j);
CertifyConfig load_config(const std::filesystem::path& path);

/// Order pairs (n, n), (p, p), (p, n) needed by a bound of base order n.
std::vector<OrderPair> required_pairs(double n, const std::vector<double>& orders);

/// Fetches the table for the config: from cache_path, else from cache_dir
/// with computation of missing entries when allowed.
ConstantTable fetch_constants(const CertifyConfig& cfg);

SpectralField build_datum(const CertifyConfig& cfg, const ConstantTable& table);
Forcing build_forcing(const CertifyConfig& cfg);

struct OrderValidation {
  double q = 0.0;
  double max_ratio = 0.0;
  double t_at_max = 0.0;
  std::vector<double> distance;  ///< |u_ref - ua|_q on the grid
};

struct ValidationResult {
  ValidationSpec spec;
  std::vector<OrderValidation> orders;
  bool pass = false;
};

/// Refined Galerkin reference at ref_M on the control grid, compared with
/// the approximant against R_q for q in {n} and the bound orders.
ValidationResult validate_against_reference(const ProblemSpec& spec, const ApproximantTrace& trace,
                                            const ControlSolution& sol, const ValidationSpec& vs);

struct StageTiming {
  std::string stage;
  double seconds = 0.0;
};

struct CertificationReport {
  enum class Status { Ok, ConfigError, ConstantsUnavailable, IntegratorFailure };
  Status status = Status::Ok;
  std::string message;
  std::string failed_stage;

  std::optional<CertifyConfig> config;
  std::optional<ConstantTable> constants;
  std::optional<ProblemSpec> problem;
  std::optional<ApproximantTrace> trace;
  std::optional<EstimatorSamples> estimators;
  std::optional<ControlSolution> control;
  /// Closed-form horizon when the approximant is zero and f = 0.
  std::optional<double> T_c_closed_form;
  std::optional<ValidationResult> validation;
  std::vector<StageTiming> timings;

  /// Certified horizon: the closed form when available, else the
  /// integrator's.
  double T_c() const;
  int exit_code() const;
};

struct RunOptions {
  bool validate = false;
  std::optional<int> ref_M;  ///< overrides the config's validation.ref_M
};

/// The full pipeline. Never throws for the documented failure classes;
/// they are recorded in the report's status with the stages completed so
/// far.
CertificationReport run_certification(const CertifyConfig& cfg, const RunOptions& opts = {});

/// report.json content (deterministic: no timings, no host data).
nlohmann::json report_json(const CertificationReport& r);
/// bounds.csv: t, R_n, then R_p and A_p per bound order.
std::string bounds_csv(const CertificationReport& r);
/// estimators.csv: t, then eps_q and D_q per estimator order.
std::string estimators_csv(const CertificationReport& r);

/// Writes report.json, bounds.csv, estimators.csv and timings.json into dir.
void emit_outputs(const CertificationReport& r, const std::filesystem::path& dir);

}  // namespace nsbound
