// multiflow: validate configurations, run unsteady and steady simulations,
// evaluate the effective-viscous-flux diagnostics and sweep parameters.
//
// Exit codes: 0 success, 1 validation failure, 2 runtime failure. The last
// line on stdout is always "RESULT key=value ...".

#include <CLI11.hpp>

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "multiflow/config.hpp"
#include "multiflow/evf.hpp"
#include "multiflow/output.hpp"
#include "multiflow/solver.hpp"

namespace fs = std::filesystem;
using namespace multiflow;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInvalid = 1;
constexpr int kExitRuntime = 2;

struct Options {
  std::string config;
  std::string out;
  std::uint64_t seed = 0;
  int jobs = 1;
  int n = 128;
  bool quiet = false;
  std::string param;
  std::vector<std::string> values;
  std::vector<int> indices{4, 8, 16, 32};
  double phase = 0.0;
};

/// Collects key=value pairs for the final RESULT line.
class Result {
 public:
  explicit Result(std::string command) { add("command", std::move(command)); }
  void add(const std::string& key, const std::string& value) { pairs_.emplace_back(key, value); }
  void add(const std::string& key, double value) { add(key, format_double(value)); }
  void add(const std::string& key, long value) { add(key, std::to_string(value)); }
  void add(const std::string& key, int value) { add(key, std::to_string(value)); }
  void add(const std::string& key, bool value) { add(key, std::string(value ? "1" : "0")); }
  std::string line() const {
    std::string s = "RESULT";
    for (const auto& [k, v] : pairs_) s += " " + k + "=" + v;
    return s;
  }

 private:
  std::vector<std::pair<std::string, std::string>> pairs_;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read configuration '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

fs::path output_directory(const Options& opt, const RunConfig* cfg) {
  if (!opt.out.empty()) return opt.out;
  if (cfg && !cfg->directory.empty()) return cfg->directory;
  if (const char* env = std::getenv("MULTIFLOW_OUT"); env && *env) return env;
  return "multiflow_out";
}

void ensure_directory(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw IoError("cannot create output directory '" + dir.string() + "'");
}

/// Prints diagnostics, returns the RESULT line status and exit code for one failure.
int report_failure(const std::exception& e, Result& result, bool quiet) {
  int code = kExitRuntime;
  std::string status = "runtime_error";
  if (const auto* parse = dynamic_cast<const ConfigParseError*>(&e)) {
    for (const auto& d : parse->diagnostics()) std::cout << d.render() << "\n";
    result.add("errors", static_cast<long>(parse->diagnostics().size()));
    code = kExitInvalid;
    status = "invalid";
  } else if (dynamic_cast<const ConfigError*>(&e) || dynamic_cast<const InvalidInputError*>(&e) ||
             dynamic_cast<const CLI::ParseError*>(&e)) {
    std::cout << "error: " << e.what() << "\n";
    code = kExitInvalid;
    status = "invalid";
  } else {
    if (!quiet) std::cout << "error: " << e.what() << "\n";
    if (const auto* solve = dynamic_cast<const SolveError*>(&e)) result.add("residual", solve->residual());
  }
  result.add("status", status);
  return code;
}

void print_warnings(const RunConfig& cfg, bool quiet) {
  if (quiet) return;
  for (const auto& w : cfg.warnings) std::cout << w.render() << "\n";
}

RunConfig load_config(const Options& opt) {
  if (opt.config.empty()) throw ConfigError("no configuration file given (positional argument or --config)");
  return parse_config(read_file(opt.config));
}

// ---------------------------------------------------------------------------

int cmd_validate(const Options& opt, Result& result) {
  const RunConfig cfg = load_config(opt);
  print_warnings(cfg, opt.quiet);
  const auto rep = validate_viscosity(build_viscosity(cfg));
  (void)build_params(cfg);
  (void)build_state(cfg);
  if (!opt.quiet) {
    std::cout << "viscosity admissibility report\n"
              << "  min eigenvalue sym(mu)              = " << format_double(rep.min_eig_mu) << "\n"
              << "  min eigenvalue sym(lambda + 2/3 mu) = " << format_double(rep.min_eig_h) << "\n"
              << "  min eigenvalue sym(lambda + 2 mu)   = " << format_double(rep.min_eig_nu) << "\n"
              << "  symmetric                           = " << (rep.symmetric ? "yes" : "no") << "\n"
              << "  admissible                          = " << (rep.admissible ? "yes" : "no") << "\n";
  }
  result.add("status", std::string("ok"));
  result.add("variant", std::string(to_string(cfg.variant)));
  result.add("N", cfg.n_constituents);
  result.add("admissible", rep.admissible);
  result.add("min_eig_sym_mu", rep.min_eig_mu);
  result.add("min_eig_sym_h", rep.min_eig_h);
  result.add("gamma_warning", gamma_below_threshold(cfg));
  result.add("warnings", static_cast<long>(cfg.warnings.size()));
  return kExitOk;
}

struct RunSummary {
  long steps = 0;
  double t_final = 0.0;
  double final_energy = 0.0;
  double mass_drift = 0.0;
  double dissipation_integral = 0.0;
  long floor_events = 0;
  bool reached_end = false;
};

/// One unsteady run written into `dir`; shared by `run` and `sweep`.
RunSummary execute_run(const RunConfig& cfg, const fs::path& dir) {
  const MixtureParams params = build_params(cfg);
  const MixtureState initial = build_state(cfg);
  const Trajectory traj = run_unsteady(initial, params, cfg.solver);
  ensure_directory(dir);
  write_timeseries(traj, cfg.n_constituents, dir / "timeseries.csv");
  write_snapshot(traj.snapshots.front(), dir / "snapshot_initial.csv");
  write_snapshot(traj.snapshots.back(), dir / "snapshot_final.csv");
  RunSummary s;
  s.steps = traj.steps;
  s.t_final = traj.times.back();
  s.final_energy = traj.series.back().energy();
  for (int i = 0; i < cfg.n_constituents; ++i) {
    const double m0 = traj.series.front().masses[i];
    const double m1 = traj.series.back().masses[i];
    s.mass_drift = std::max(s.mass_drift, std::abs(m1 - m0) / std::abs(m0));
  }
  s.dissipation_integral = traj.dissipation_integral;
  s.floor_events = traj.floor_events;
  s.reached_end = traj.reached_end;
  return s;
}

int cmd_run(const Options& opt, Result& result) {
  const RunConfig cfg = load_config(opt);
  print_warnings(cfg, opt.quiet);
  const fs::path dir = output_directory(opt, &cfg);
  const RunSummary s = execute_run(cfg, dir);
  if (!opt.quiet) std::cout << "wrote " << (dir / "timeseries.csv").string() << "\n";
  result.add("status", std::string("ok"));
  result.add("steps", s.steps);
  result.add("t_final", s.t_final);
  result.add("reached_end", s.reached_end);
  result.add("final_energy", s.final_energy);
  result.add("mass_drift", s.mass_drift);
  result.add("dissipation_integral", s.dissipation_integral);
  result.add("floor_events", s.floor_events);
  result.add("seed", static_cast<long>(opt.seed));
  result.add("out", dir.string());
  return kExitOk;
}

int cmd_steady(const Options& opt, Result& result) {
  const RunConfig cfg = load_config(opt);
  print_warnings(cfg, opt.quiet);
  if (cfg.grid.bc != Boundary::NoSlip) throw ConfigError("grid.bc: the steady solver needs noslip boundaries");
  const MixtureParams params = build_params(cfg);
  const MixtureState initial = build_state(cfg);
  const SteadyResult res = run_steady(initial, params, cfg.solver);
  const fs::path dir = output_directory(opt, &cfg);
  ensure_directory(dir);
  write_snapshot(res.state, dir / "steady_state.csv");
  {
    std::string text = "step,residual\n";
    for (std::size_t k = 0; k < res.residual_history.size(); ++k)
      text += std::to_string(k + 1) + "," + format_double(res.residual_history[k]) + "\n";
    detail::write_text_file(dir / "residuals.csv", text);
  }
  double diag = 0.0;
  for (double d : res.steady_diagnostic) diag = std::max(diag, d);
  double drift = 0.0;
  for (int i = 0; i < cfg.n_constituents; ++i) {
    const double m = integrate(res.state.rho[i], res.state.grid);
    drift = std::max(drift, std::abs(m - res.initial_masses[i]) / std::abs(res.initial_masses[i]));
  }
  result.add("status", std::string(res.converged ? "ok" : "not_converged"));
  result.add("converged", res.converged);
  result.add("steps", res.steps);
  result.add("residual", res.final_residual());
  result.add("steady_diagnostic", diag);
  result.add("mass_drift", drift);
  result.add("floor_events", res.floor_events);
  result.add("out", dir.string());
  return res.converged ? kExitOk : kExitRuntime;
}

// ---------------------------------------------------------------------------
// Diagnostics on the 2D torus with seeded smooth inputs.

constexpr double kDiagRadius = 0.5;
constexpr double kDiagTolerance = 1e-9;

int cmd_diag_identity(const Options& opt, Result& result) {
  SpectralOps ops(opt.n);
  std::mt19937_64 rng(opt.seed);
  const auto sxx = SmoothFieldSpec::random(rng, kDiagRadius);
  const auto sxy = SmoothFieldSpec::random(rng, kDiagRadius);
  const auto syy = SmoothFieldSpec::random(rng, kDiagRadius);
  const auto rho = SmoothFieldSpec::random(rng, kDiagRadius, 4, 2.0);
  const auto tau = SmoothFieldSpec::random(rng, kDiagRadius);
  const SymTensorField2D stress{sxx.sample(opt.n), sxy.sample(opt.n), syy.sample(opt.n)};
  const auto spectral = div_identity_residual(ops, stress, rho.sample(opt.n), tau.sample(opt.n));
  const auto analytic = div_identity_residual_analytic(ops, sxx, sxy, syy, rho, tau);
  const auto unit_tau = div_identity_residual(ops, stress, rho.sample(opt.n), PeriodicField2D(opt.n, 1.0));
  const auto renorm = renorm_residual(ops, rho.sample(opt.n), VectorField2D{sxx.sample(opt.n), syy.sample(opt.n)});
  EvfReport report;
  report.add("identity_residual", spectral.relative());
  report.add("identity_residual_analytic_inputs", analytic.relative());
  report.add("identity_residual_unit_tau", unit_tau.relative());
  report.add("renormalization_residual", renorm.relative());
  if (!opt.quiet) std::cout << report.render();
  const double worst = std::max({spectral.relative(), analytic.relative(), unit_tau.relative()});
  const bool pass = worst <= kDiagTolerance;
  result.add("status", std::string(pass ? "ok" : "above_tolerance"));
  result.add("n", opt.n);
  result.add("seed", static_cast<long>(opt.seed));
  result.add("residual", spectral.relative());
  result.add("residual_analytic", analytic.relative());
  result.add("tolerance", kDiagTolerance);
  return pass ? kExitOk : kExitRuntime;
}

int cmd_diag_comm(const Options& opt, Result& result) {
  SpectralOps ops(opt.n);
  std::mt19937_64 rng(opt.seed);
  auto field = [&](double offset = 0.0) { return SmoothFieldSpec::random(rng, kDiagRadius, 4, offset).sample(opt.n); };
  const VectorField2D w{field(), field()};
  const VectorField2D u{field(), field()};
  const PeriodicField2D rho_i = field(2.0);
  const PeriodicField2D rho_j = field(2.0);
  const auto ce = comm_expansion_residual(ops, w, u, rho_i, rho_j);
  const auto sa = check_selfadjoint(ops, rho_i, rho_j);
  EvfReport report;
  report.add("comm_expansion_steady_residual", ce.steady_relative());
  report.add("comm_expansion_unsteady_residual", ce.unsteady_relative());
  report.add("selfadjoint_gap", sa.relative());
  if (!opt.quiet) std::cout << report.render();
  const double worst = std::max({ce.steady_relative(), ce.unsteady_relative(), sa.relative()});
  const bool pass = worst <= kDiagTolerance;
  result.add("status", std::string(pass ? "ok" : "above_tolerance"));
  result.add("n", opt.n);
  result.add("seed", static_cast<long>(opt.seed));
  result.add("steady_residual", ce.steady_relative());
  result.add("unsteady_residual", ce.unsteady_relative());
  result.add("selfadjoint_gap", sa.relative());
  return pass ? kExitOk : kExitRuntime;
}

int cmd_diag_weak_limit(const Options& opt, Result& result) {
  SpectralOps ops(opt.n);
  std::mt19937_64 rng(opt.seed);
  OscillatorySequenceSpec spec;
  spec.a0 = SmoothFieldSpec::random(rng, kDiagRadius, 4, 1.0).sample(opt.n);
  spec.b0 = SmoothFieldSpec::random(rng, kDiagRadius, 4, -0.5).sample(opt.n);
  spec.phase = opt.phase;
  spec.indices = opt.indices;
  const PeriodicField2D phi = SmoothFieldSpec::random(rng, kDiagRadius, 4, 1.0).sample(opt.n);
  EvfReport report;
  report.weak_limit = weak_limit_experiment(ops, spec, phi);
  if (!opt.quiet) std::cout << report.render();
  const auto& table = *report.weak_limit;
  result.add("status", std::string("ok"));
  result.add("n", opt.n);
  result.add("seed", static_cast<long>(opt.seed));
  result.add("analytic_product_limit", table.analytic_product_limit);
  result.add("last_product_gap", table.rows.empty() ? 0.0 : table.rows.back().product_gap);
  result.add("comm_rate_exponent", table.comm_rate_exponent);
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct SweepRow {
  std::string value;
  std::string status = "ok";
  std::string message;
  RunSummary summary;
  bool gamma_warning = false;
};

std::string sanitize(const std::string& v) {
  std::string s;
  for (char c : v) s += (std::isalnum(static_cast<unsigned char>(c)) || c == '.' || c == '-' || c == '+') ? c : '_';
  return s.empty() ? "_" : s;
}

int cmd_sweep(const Options& opt, Result& result) {
  if (opt.config.empty()) throw ConfigError("no configuration file given (positional argument or --config)");
  if (opt.jobs < 1) throw ConfigError("--jobs must be at least 1");
  const ConfigDocument base = ConfigDocument::parse(read_file(opt.config));
  {
    ConfigDocument probe = base;
    apply_override(probe, opt.param, "0");  // path check only
  }
  const RunConfig base_cfg = interpret(base);
  const fs::path root = output_directory(opt, &base_cfg);
  ensure_directory(root);

  std::vector<SweepRow> rows(opt.values.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (std::size_t k = next++; k < rows.size(); k = next++) {
      SweepRow& row = rows[k];
      row.value = opt.values[k];
      try {
        ConfigDocument doc = base;
        apply_override(doc, opt.param, row.value);
        const RunConfig cfg = interpret(doc);
        row.gamma_warning = gamma_below_threshold(cfg);
        row.summary = execute_run(cfg, root / ("run_" + std::to_string(k + 1) + "_" + sanitize(row.value)));
      } catch (const ConfigError& e) {
        row.status = "invalid";
        row.message = e.what();
      } catch (const std::exception& e) {
        row.status = "failed";
        row.message = e.what();
      }
    }
  };
  const int workers = std::min<int>(opt.jobs, std::max<int>(1, static_cast<int>(rows.size())));
  std::vector<std::thread> pool;
  for (int w = 1; w < workers; ++w) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  std::string table = "index,value,status,final_energy,mass_drift,dissipation_integral,gamma_warning\n";
  long failed = 0;
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const auto& r = rows[k];
    const bool ok = r.status == "ok";
    if (!ok) ++failed;
    table += std::to_string(k + 1) + "," + r.value + "," + r.status + "," +
             (ok ? format_double(r.summary.final_energy) : "nan") + "," +
             (ok ? format_double(r.summary.mass_drift) : "nan") + "," +
             (ok ? format_double(r.summary.dissipation_integral) : "nan") + "," + (r.gamma_warning ? "1" : "0") +
             "\n";
  }
  detail::write_text_file(root / "summary.csv", table);
  if (!opt.quiet) {
    std::cout << table;
    for (std::size_t k = 0; k < rows.size(); ++k)
      if (!rows[k].message.empty()) std::cout << "row " << k + 1 << ": " << rows[k].message << "\n";
  }
  result.add("status", std::string(failed == 0 ? "ok" : "row_failures"));
  result.add("param", opt.param);
  result.add("rows", static_cast<long>(rows.size()));
  result.add("failed", failed);
  result.add("out", root.string());
  return failed == 0 ? kExitOk : kExitRuntime;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"multiflow: viscous compressible multi-fluid simulations and diagnostics"};
  app.require_subcommand(1, 1);
  Options opt;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--out", opt.out, "Output directory (default: config, $MULTIFLOW_OUT, ./multiflow_out)");
    sub->add_option("--seed", opt.seed, "Seed for generated inputs");
    sub->add_flag("--quiet", opt.quiet, "Only print the RESULT line");
  };
  auto add_config = [&](CLI::App* sub) {
    sub->add_option("--config,config", opt.config, "Configuration file (positional or --config)");
  };

  auto* validate = app.add_subcommand("validate", "Parse and validate a configuration");
  add_config(validate);
  add_common(validate);
  auto* run = app.add_subcommand("run", "Unsteady simulation");
  add_config(run);
  add_common(run);
  auto* steady = app.add_subcommand("steady", "Pseudo-time steady solve (noslip)");
  add_config(steady);
  add_common(steady);

  auto* diag = app.add_subcommand("diag", "Effective-viscous-flux diagnostics on the 2D torus");
  diag->require_subcommand(1, 1);
  auto* identity = diag->add_subcommand("identity", "Stress identity residual");
  auto* comm = diag->add_subcommand("comm", "Comm expansion residuals and self-adjointness gap");
  auto* weak = diag->add_subcommand("weak-limit", "Oscillating-sequence weak-limit table");
  for (auto* sub : {identity, comm, weak}) add_common(sub);
  identity->add_option("--n", opt.n, "Grid size (power of two, >= 16)")->capture_default_str();
  comm->add_option("--n", opt.n, "Grid size (power of two, >= 16)")->capture_default_str();
  // Index 32 needs more than 128 points per direction.
  int weak_n = 256;
  weak->add_option("--n", weak_n, "Grid size (power of two, >= 16)")->capture_default_str();
  weak->add_option("--indices", opt.indices, "Oscillation indices")->delimiter(',');
  weak->add_option("--phase", opt.phase, "Phase of the b-sequence");

  auto* sweep = app.add_subcommand("sweep", "Independent runs over one parameter");
  add_config(sweep);
  add_common(sweep);
  sweep->add_option("--param", opt.param, "Parameter path section.key")->required();
  sweep->add_option("--values", opt.values, "Values (comma separated)")->delimiter(',');
  sweep->add_option("--jobs", opt.jobs, "Parallel workers (default 1)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cout << app.help() << "error: " << e.what() << "\n";
    std::cout << "RESULT command=none status=usage\n";
    return kExitInvalid;
  }

  std::string name = app.get_subcommands().front()->get_name();
  if (name == "diag") name += "-" + diag->get_subcommands().front()->get_name();
  Result result(name);
  int code = kExitOk;
  try {
    if (validate->parsed()) code = cmd_validate(opt, result);
    else if (run->parsed()) code = cmd_run(opt, result);
    else if (steady->parsed()) code = cmd_steady(opt, result);
    else if (identity->parsed()) code = cmd_diag_identity(opt, result);
    else if (comm->parsed()) code = cmd_diag_comm(opt, result);
    else if (weak->parsed()) {
      opt.n = weak_n;
      code = cmd_diag_weak_limit(opt, result);
    }
    else if (sweep->parsed()) code = cmd_sweep(opt, result);
  } catch (const std::exception& e) {
    code = report_failure(e, result, opt.quiet);
  }
  std::cout << result.line() << std::endl;
  return code;
}
