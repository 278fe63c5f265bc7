#include <omp.h>

#include <CLI11.hpp>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <json.hpp>

#include "nsbound/certify.hpp"
#include "nsbound/errors.hpp"
#include "nsbound/tame_constants.hpp"

namespace {

using nsbound::CertificationReport;
using nsbound::CertifyConfig;

struct CommonFlags {
  std::string config;
  std::string out;
  int threads = 0;
  std::optional<std::uint64_t> seed;
};

void add_common(CLI::App* cmd, CommonFlags& f, bool config_required) {
  auto* c = cmd->add_option("--config", f.config, "problem config (JSON)");
  if (config_required) c->required();
  cmd->add_option("--out", f.out, "output directory (overrides out_dir)");
  cmd->add_option("--threads", f.threads, "OpenMP threads (0 = runtime default)")->check(CLI::NonNegativeNumber);
  cmd->add_option("--seed", f.seed, "seed for random data (overrides seed)");
}

void apply_threads(int threads) {
  if (threads > 0) omp_set_num_threads(threads);
}

/// Writes a report holding only the failure status when the config itself
/// could not be loaded.
int config_failure(const std::string& what, const std::string& out) {
  std::cerr << "nsbound: configuration error: " << what << '\n';
  if (!out.empty()) {
    CertificationReport r;
    r.status = CertificationReport::Status::ConfigError;
    r.message = what;
    r.failed_stage = "config";
    try {
      nsbound::emit_outputs(r, out);
    } catch (const std::exception& e) {
      std::cerr << "nsbound: " << e.what() << '\n';
    }
  }
  return 2;
}

int run_pipeline(const CommonFlags& f, bool validate, std::optional<int> ref_M) {
  apply_threads(f.threads);
  CertifyConfig cfg;
  try {
    cfg = nsbound::load_config(f.config);
  } catch (const nsbound::ConfigError& e) {
    return config_failure(e.what(), f.out);
  }
  if (f.seed) cfg.seed = *f.seed;
  const std::filesystem::path out = f.out.empty() ? cfg.out_dir : std::filesystem::path(f.out);

  nsbound::RunOptions opts;
  opts.validate = validate;
  opts.ref_M = ref_M;
  const CertificationReport r = nsbound::run_certification(cfg, opts);
  try {
    nsbound::emit_outputs(r, out);
  } catch (const std::exception& e) {
    std::cerr << "nsbound: " << e.what() << '\n';
    return 1;
  }
  if (r.status != CertificationReport::Status::Ok) {
    std::cerr << "nsbound: " << r.failed_stage << " failed: " << r.message << '\n';
    return r.exit_code();
  }
  const auto j = nsbound::report_json(r);
  std::cout << "T_c = " << j["control"]["T_c"].dump() << " (" << j["control"]["certified"].get<std::string>()
            << ")\n";
  if (r.validation) {
    for (const auto& o : r.validation->orders) std::printf("validation q=%g max ratio %.6g\n", o.q, o.max_ratio);
    std::cout << "validation " << (r.validation->pass ? "passed" : "failed") << '\n';
  }
  std::cout << "outputs written to " << out.string() << '\n';
  return 0;
}

int run_constants(const CommonFlags& f, int dim, double n, std::vector<double> orders, int H, int Kmax,
                  double margin, bool have_explicit) {
  apply_threads(f.threads);
  nsbound::LatticeTruncation trunc{H, Kmax, margin};
  if (!f.config.empty()) {
    try {
      const auto cfg = nsbound::load_config(f.config);
      dim = cfg.dim;
      n = cfg.n;
      orders = cfg.orders;
      if (!have_explicit) trunc = cfg.constants.trunc;
    } catch (const nsbound::ConfigError& e) {
      return config_failure(e.what(), "");
    }
  }
  const std::filesystem::path out = f.out.empty() ? std::filesystem::path("constants") : std::filesystem::path(f.out);
  try {
    trunc.validate();
    std::filesystem::create_directories(out);
    const auto pairs = nsbound::required_pairs(n, orders);
    const auto table = nsbound::load_or_compute_constants(dim, pairs, trunc, out, true);
    nlohmann::json all = nlohmann::json::array();
    for (const auto& pr : pairs) {
      const auto& e = table.entry(pr.p, pr.n);
      all.push_back(nlohmann::json::parse(nsbound::constant_entry_to_json(dim, trunc, e)));
      std::printf("p=%-5g n=%-5g K_pn=%.10g G_pn=%s plateau=%s\n", e.p, e.n, e.K,
                  e.G ? std::to_string(*e.G).c_str() : "n/a", (e.plateau_K && e.plateau_G) ? "yes" : "no");
    }
    std::ofstream(out / "table.json") << all.dump(2) << '\n';
  } catch (const std::invalid_argument& e) {
    return config_failure(e.what(), "");
  } catch (const std::exception& e) {
    std::cerr << "nsbound: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Existence-time and Sobolev error bounds for Navier-Stokes/Euler on the torus"};
  app.require_subcommand(1);

  CommonFlags cf, cc, cv;
  int dim = 3;
  double n = 3.0;
  std::vector<double> orders;
  int H = 40;
  int Kmax = 20;
  double margin = 1.1;
  auto* constants = app.add_subcommand("constants", "compute and cache the inequality constants");
  add_common(constants, cf, false);
  constants->add_option("--dim", dim, "spatial dimension");
  constants->add_option("--n", n, "base order");
  constants->add_option("--orders", orders, "bound orders p");
  auto* oH = constants->add_option("--H", H, "lattice sum radius");
  auto* oK = constants->add_option("--Kmax", Kmax, "sup search radius");
  auto* oM = constants->add_option("--tail-margin", margin, "multiplicative margin on the sup");

  auto* certify = app.add_subcommand("certify", "run the certification pipeline");
  add_common(certify, cc, true);

  std::optional<int> ref_M;
  auto* validate = app.add_subcommand("validate", "certify, then compare with a refined Galerkin reference");
  add_common(validate, cv, true);
  validate->add_option("--ref-M", ref_M, "reference truncation (overrides validation.ref_M)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*constants) {
      const bool explicit_trunc = oH->count() + oK->count() + oM->count() > 0;
      return run_constants(cf, dim, n, orders, H, Kmax, margin, explicit_trunc);
    }
    if (*certify) return run_pipeline(cc, false, std::nullopt);
    return run_pipeline(cv, true, ref_M);
  } catch (const std::exception& e) {
    std::cerr << "nsbound: " << e.what() << '\n';
    return 1;
  }
}
