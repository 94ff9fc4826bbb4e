// Acceptance checks: one line per criterion, "[PASS]" or "[FAIL]".
//
//   acceptance [--only K] [--known-failure K]...
//
// A criterion listed with --known-failure is still run and printed. The exit
// status is zero when every other criterion passes and each known failure
// still fails, so an unexpected pass is reported too.

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <numbers>
#include <random>
#include <set>
#include <sstream>

#include "cli_harness.hpp"
#include "multiflow/evf.hpp"
#include "multiflow/profiles.hpp"
#include "multiflow/solver.hpp"
#include "test_support.hpp"

using namespace multiflow;
using std::numbers::pi;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

MixtureParams make_params(ModelVariant v, const Matrix& mu, const Matrix& lam, std::vector<PressureLaw> laws) {
  MixtureParams p;
  p.n_constituents = static_cast<int>(mu.rows());
  p.variant = v;
  p.visc = ViscosityMatrices(mu, lam);
  p.pressure = std::move(laws);
  return p;
}

// ---------------------------------------------------------------------------

Outcome viscosity_admissibility() {
  Matrix indefinite(2, 2);
  indefinite << 1, 2, 2, 1;
  const bool scalar = validate_viscosity(Matrix::Ones(1, 1), Matrix::Zero(1, 1)).admissible;
  const auto boundary = validate_viscosity(Matrix::Identity(2, 2), -2.0 / 3.0 * Matrix::Identity(2, 2));
  const bool rejected = !validate_viscosity(indefinite, Matrix::Zero(2, 2)).admissible;
  const bool examples = scalar && boundary.admissible && std::abs(boundary.min_eig_h) < 1e-15 && rejected;

  std::mt19937_64 rng(20240611);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  int agree = 0, admissible = 0;
  const int trials = 500;
  for (int trial = 0; trial < trials; ++trial) {
    const int n = 1 + static_cast<int>(rng() % 5);
    Matrix mu(n, n), lam(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        mu(i, j) = u(rng);
        lam(i, j) = u(rng);
      }
    mu += (0.8 + 0.6 * u(rng)) * n * 0.5 * Matrix::Identity(n, n);
    lam += (0.4 * u(rng)) * n * Matrix::Identity(n, n);
    const Matrix h = lam + (2.0 / 3.0) * mu;
    const auto eig_mu = testing_support::jacobi_eigenvalues(0.5 * (mu + mu.transpose()));
    const auto eig_h = testing_support::jacobi_eigenvalues(0.5 * (h + h.transpose()));
    double scale = 0.0;
    for (double e : eig_h) scale = std::max(scale, std::abs(e));
    const bool oracle = *std::min_element(eig_mu.begin(), eig_mu.end()) > 0.0 &&
                        *std::min_element(eig_h.begin(), eig_h.end()) >= -1e-10 * scale;
    const bool got = validate_viscosity(mu, lam).admissible;
    agree += got == oracle;
    admissible += got;
  }
  return {examples && agree == trials,
          "examples " + std::string(examples ? "ok" : "wrong") + ", " + std::to_string(agree) + "/" +
              std::to_string(trials) + " random pairs agree (" + std::to_string(admissible) + " admissible)"};
}

// N = 3 Modified, periodic, n = 256, 2000 steps, full admissible viscosity, f = 0.
Trajectory three_constituent_run() {
  std::mt19937_64 rng(12345);
  std::uniform_real_distribution<double> u(-1, 1);
  const int n = 3;
  Matrix a(n, n), b(n, n), s(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      a(i, j) = u(rng);
      b(i, j) = u(rng);
      s(i, j) = u(rng);
    }
  const Matrix mu = 0.3 * a * a.transpose() + 0.5 * Matrix::Identity(n, n) + 0.2 * (s - s.transpose());
  const Matrix lam = 0.2 * b * b.transpose() - (2.0 / 3.0) * mu;
  const auto p = make_params(ModelVariant::Modified, mu, lam, {PressureLaw::polytropic(0.1, 2.0)});
  const Grid1D g(1.0, 256, Boundary::Periodic);
  MixtureState st;
  st.grid = g;
  st.variant = ModelVariant::Modified;
  for (int i = 0; i < n; ++i) {
    Field r(g.n_cells), v(g.n_cells);
    for (int c = 0; c < g.n_cells; ++c) {
      const double x = g.x(c);
      r[c] = 1.0 + 0.3 * i + 1e-3 * std::sin(2 * pi * (i + 1) * x + i);
      v[c] = 1e-3 * std::cos(2 * pi * (i + 2) * x);
    }
    st.rho.push_back(r);
    st.u.push_back(v);
  }
  SolverConfig cfg;
  cfg.t_end = 1e9;
  cfg.max_steps = 2000;
  return run_unsteady(st, p, cfg);
}

const Trajectory& shared_run() {
  static const Trajectory t = three_constituent_run();
  return t;
}

Outcome mass_conservation() {
  const auto& t = shared_run();
  double drift = 0.0;
  for (const auto& d : t.series)
    for (std::size_t i = 0; i < d.masses.size(); ++i)
      drift = std::max(drift, std::abs(d.masses[i] - t.series.front().masses[i]) / t.series.front().masses[i]);
  return {t.steps == 2000 && drift <= 1e-12 && t.floor_events == 0,
          std::to_string(t.steps) + " steps, max relative drift " + fmt(drift) + ", floor events " +
              std::to_string(t.floor_events)};
}

Outcome energy_dissipation() {
  const auto& t = shared_run();
  const double e0 = t.series.front().energy();
  double worst_increase = 0.0, min_diss = std::numeric_limits<double>::infinity();
  for (std::size_t k = 1; k < t.series.size(); ++k)
    worst_increase = std::max(worst_increase, t.series[k].energy() - t.series[k - 1].energy());
  for (const auto& d : t.series) min_diss = std::min(min_diss, d.dissipation);
  worst_increase = std::max(worst_increase, t.max_energy_increase);
  min_diss = std::min(min_diss, t.min_dissipation);
  return {worst_increase <= 1e-10 * e0 && min_diss >= -1e-12,
          "max step energy increase " + fmt(worst_increase / e0) + " E(0), min dissipation " + fmt(min_diss)};
}

Outcome mono_fluid_reduction() {
  const auto mc = ManufacturedCase::by_name("traveling_wave", 1);
  auto p = make_params(ModelVariant::Modified, Matrix::Constant(1, 1, 0.05), Matrix::Zero(1, 1),
                       {PressureLaw::polytropic(1.0, 2.0)});
  p.body_force = manufactured_forcing(mc, ModelVariant::Modified, p);
  std::vector<double> h, err;
  for (int n : {64, 128, 256}) {
    const Grid1D g(1.0, n, Boundary::Periodic);
    SolverConfig cfg;
    cfg.t_end = 0.5;
    const auto t = run_unsteady(mc.initial_state(g, ModelVariant::Modified), p, cfg);
    const auto& s = t.snapshots.back();
    const double time = t.times.back();
    double e = 0.0;
    for (int c = 0; c < n; ++c) {
      const double x = g.x(c);
      const double r = mc.rho(0, x, time).value;
      const double m = r * mc.u(0, x, time, ModelVariant::Modified).value;
      e += (std::pow(s.rho[0][c] - r, 2) + std::pow(s.rho[0][c] * s.u[0][c] - m, 2)) * g.dx();
    }
    h.push_back(1.0 / n);
    err.push_back(std::sqrt(e));
  }
  const double order = fitted_rate_exponent(h, err);

  std::vector<Trajectory> runs;
  for (auto v : {ModelVariant::Modified, ModelVariant::Original}) {
    auto q = make_params(v, Matrix::Constant(1, 1, 0.05), Matrix::Zero(1, 1), {PressureLaw::polytropic(1.0, 2.0)});
    q.exchange = ExchangeMatrix(Matrix::Zero(1, 1));
    q.body_force = manufactured_forcing(mc, v, q);
    SolverConfig cfg;
    cfg.t_end = 0.5;
    runs.push_back(run_unsteady(mc.initial_state(Grid1D(1.0, 128, Boundary::Periodic), v), q, cfg));
  }
  bool identical = runs[0].times == runs[1].times && runs[0].snapshots.size() == runs[1].snapshots.size();
  for (std::size_t k = 0; identical && k < runs[0].snapshots.size(); ++k)
    identical = runs[0].snapshots[k].rho == runs[1].snapshots[k].rho && runs[0].snapshots[k].u == runs[1].snapshots[k].u;
  return {order >= 1.0 && identical, "observed L2 order " + fmt(order) + " (need >= 1.0), variants " +
                                         std::string(identical ? "bitwise identical" : "differ")};
}

Outcome ode_reduction() {
  Matrix a(3, 3);
  a << 0, 2.0, 0.5, 2.0, 0, 1.0, 0.5, 1.0, 0;
  const std::vector<double> rho{1.0, 0.6, 2.0}, u0{1.0, -0.5, 0.2};
  const auto law = PressureLaw::polytropic(1, 2);
  auto p = make_params(ModelVariant::Original, 0.1 * Matrix::Identity(3, 3), Matrix::Zero(3, 3), {law, law, law});
  p.exchange = ExchangeMatrix(a);
  const Grid1D g(1.0, 8, Boundary::Periodic);
  MixtureState s;
  s.grid = g;
  s.variant = ModelVariant::Original;
  for (int i = 0; i < 3; ++i) {
    s.rho.emplace_back(g.n_cells, rho[i]);
    s.u.emplace_back(g.n_cells, u0[i]);
  }
  SolverConfig cfg;
  cfg.t_end = 1.0;
  cfg.dt_init = cfg.dt_max = 0.01;
  const auto t = run_unsteady(s, p, cfg);
  const auto oracle = testing_support::rk4(u0, 1.0, 10000, [&](const std::vector<double>& v) {
    std::vector<double> dv(3, 0.0);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) dv[i] += a(i, j) * (v[j] - v[i]) / rho[i];
    return dv;
  });
  double gap = 0.0;
  for (int i = 0; i < 3; ++i)
    for (double v : t.snapshots.back().u[i]) gap = std::max(gap, std::abs(v - oracle[i]));
  return {std::abs(t.times.back() - 1.0) < 1e-12 && gap <= 1e-6 && t.max_exchange_imbalance <= 1e-14,
          "max |u - ode| at t=1: " + fmt(gap) + ", max sum J imbalance " + fmt(t.max_exchange_imbalance)};
}

Outcome steady_solver() {
  std::ostringstream detail;
  bool pass = true;
  for (auto v : {ModelVariant::Modified, ModelVariant::Original}) {
    Matrix mu(2, 2);
    mu << 1.0, 0.3, -0.1, 0.8;
    std::vector<PressureLaw> laws{PressureLaw::polytropic(1.0, 2.0)};
    if (v == ModelVariant::Original) laws.push_back(PressureLaw::polytropic(0.5, 1.8));
    auto p = make_params(v, mu, Matrix::Zero(2, 2), laws);
    if (v == ModelVariant::Original) {
      Matrix a(2, 2);
      a << 0, 1, 1, 0;
      p.exchange = ExchangeMatrix(a);
    }
    const Grid1D g(1.0, 64, Boundary::NoSlip);
    MixtureState s;
    s.grid = g;
    s.variant = v;
    for (int i = 0; i < 2; ++i) {
      Field r(g.n_cells), u(g.n_cells);
      for (int c = 0; c < g.n_cells; ++c) {
        r[c] = 1 + 0.2 * i + 0.1 * std::cos(pi * g.x(c) * (i + 1));
        u[c] = 0.05 * std::sin(pi * g.x(c));
      }
      s.rho.push_back(r);
      s.u.push_back(u);
    }
    SolverConfig cfg;
    cfg.steady_tol = 1e-10;
    cfg.max_steps = 200000;
    const auto res = run_steady(s, p, cfg);
    double mass = 0.0, diag = 0.0;
    for (int i = 0; i < 2; ++i) {
      mass = std::max(mass, std::abs(integrate(res.state.rho[i], g) - res.initial_masses[i]) / res.initial_masses[i]);
      diag = std::max(diag, res.steady_diagnostic[i]);
    }
    pass = pass && res.converged && res.final_residual() < 1e-10 && mass <= 1e-12 && diag <= 1e-9;
    detail << to_string(v) << ": " << (res.converged ? "converged" : "not converged") << " in " << res.steps
           << " steps, residual " << fmt(res.final_residual()) << ", mass drift " << fmt(mass) << ", |int rho div v| "
           << fmt(diag) << (v == ModelVariant::Modified ? "; " : "");
  }
  return {pass, detail.str()};
}

Outcome divergence_identity() {
  const SpectralOps o128(128), o256(256);
  double worst = 0.0, min_ratio = std::numeric_limits<double>::infinity();
  for (int seed = 1000; seed < 1020; ++seed) {
    std::mt19937_64 rng(seed);
    const double r = 0.8;
    const auto sxx = SmoothFieldSpec::random(rng, r), sxy = SmoothFieldSpec::random(rng, r),
               syy = SmoothFieldSpec::random(rng, r), rho = SmoothFieldSpec::random(rng, r, 4, 2.0),
               tau = SmoothFieldSpec::random(rng, r);
    const double a = div_identity_residual_analytic(o128, sxx, sxy, syy, rho, tau).relative();
    const double b = div_identity_residual_analytic(o256, sxx, sxy, syy, rho, tau).relative();
    worst = std::max(worst, a);
    min_ratio = std::min(min_ratio, a / b);
  }
  return {worst <= 1e-9 && min_ratio >= 10.0,
          "20 seeds, worst relative residual " + fmt(worst) + " at n=128, smallest decrease to n=256 " + fmt(min_ratio) +
              "x"};
}

Outcome self_adjointness() {
  const int n = 128;
  const SpectralOps ops(n);
  double worst = 0.0;
  for (int seed = 2000; seed < 2020; ++seed) {
    std::mt19937_64 rng(seed);
    const auto f = SmoothFieldSpec::random(rng, 0.6, 4, 1.0).sample(n);
    const auto g = SmoothFieldSpec::random(rng, 0.6).sample(n);
    worst = std::max(worst, check_selfadjoint(ops, f, g).relative());
  }
  return {worst <= 1e-10, "20 seeded pairs, worst relative gap " + fmt(worst)};
}

Outcome comm_expansions() {
  const int n = 128;
  const SpectralOps ops(n);
  double steady = 0.0, unsteady = 0.0;
  for (int seed = 3000; seed < 3020; ++seed) {
    std::mt19937_64 rng(seed);
    auto field = [&](double offset = 0.0) { return SmoothFieldSpec::random(rng, 0.5, 4, offset).sample(n); };
    const VectorField2D w{field(), field()};
    const VectorField2D u{field(), field()};
    const auto rho_i = field(2.0);
    const auto rho_j = field(2.0);
    const auto r = comm_expansion_residual(ops, w, u, rho_i, rho_j);
    steady = std::max(steady, r.steady_relative());
    unsteady = std::max(unsteady, r.unsteady_relative());
  }
  return {steady <= 1e-9 && unsteady <= 1e-9,
          "20 seeds, worst steady " + fmt(steady) + ", worst unsteady " + fmt(unsteady)};
}

Outcome weak_limit() {
  const int n = 256;
  const SpectralOps ops(n);
  std::mt19937_64 rng(1);
  OscillatorySequenceSpec spec;
  spec.a0 = SmoothFieldSpec::random(rng, 0.5, 4, 1.0).sample(n);
  spec.b0 = SmoothFieldSpec::random(rng, 0.5, 4, -0.5).sample(n);
  const auto phi = SmoothFieldSpec::random(rng, 0.5, 4, 1.0).sample(n);
  const auto t = weak_limit_experiment(ops, spec, phi);
  bool monotone = true;
  for (std::size_t k = 1; k < t.rows.size(); ++k) monotone = monotone && t.rows[k].comm_gap < t.rows[k - 1].comm_gap;
  const double limit = 0.5 * std::abs(phi.integral());
  const double rel = std::abs(t.rows.back().product_gap - limit) / limit;
  return {monotone && t.comm_rate_exponent <= -0.9 && rel <= 0.01 &&
              std::abs(t.analytic_product_limit - limit) <= 1e-12 * limit,
          "product gap at n=" + std::to_string(t.rows.back().index) + " within " + fmt(rel) + " of <1/2,phi>, comm gap " +
              (monotone ? "monotone" : "not monotone") + " with exponent " + fmt(t.comm_rate_exponent)};
}

Outcome cutoff_suite() {
  std::mt19937_64 rng(4242);
  std::uniform_real_distribution<double> s(-5.0, 10.0), rr(1e-3, 6.0);
  long violations = 0;
  const int points = 10000;
  for (int k = 0; k < points; ++k) {
    const double a = s(rng), b = s(rng), r = rr(rng);
    const double ta = cutoff(a, r), tb = cutoff(b, r);
    if ((a <= b) != (ta <= tb) && ta != tb) ++violations;
    if (std::abs(ta - tb) > std::abs(a - b)) ++violations;
    if (cutoff(ta, r) != ta) ++violations;
    if (a >= r && ta != r) ++violations;
    if (a < r && ta != a) ++violations;
  }
  bool rejects = false;
  try {
    (void)cutoff(1.0, 0.0);
  } catch (const DomainError&) {
    rejects = true;
  }
  return {violations == 0 && rejects,
          std::to_string(points) + " points, " + std::to_string(violations) + " violations, r <= 0 " +
              (rejects ? "rejected" : "accepted")};
}

Outcome cli_contract() {
  namespace fs = std::filesystem;
  const std::string cli = MULTIFLOW_CLI_PATH;
  const fs::path data = MULTIFLOW_CLI_DATA;
  const auto manifest = cli_harness::read_manifest(data / "manifest.txt");
  const auto root = cli_harness::scratch("acceptance_cli");
  std::set<std::string> configs;
  int code_mismatch = 0, rerun_mismatch = 0, k = 0;
  for (const auto& e : manifest) {
    configs.insert(e.config);
    // The identical command line twice, output directory cleared in between.
    std::vector<cli_harness::Invocation> inv;
    std::vector<std::map<std::string, std::string>> trees;
    const auto out = root / std::to_string(k++);
    for (int rep = 0; rep < 2; ++rep) {
      fs::remove_all(out);
      inv.push_back(cli_harness::run(cli, {e.command, "--config", (data / e.config).string(), "--out", out.string()}));
      trees.push_back(cli_harness::tree(out));
    }
    if (inv[0].exit_code != e.expected) {
      ++code_mismatch;
      std::cerr << "  exit code " << inv[0].exit_code << " for " << e.command << " " << e.config << ", expected "
                << e.expected << "\n";
    }
    if (inv[0].exit_code != inv[1].exit_code || inv[0].output != inv[1].output || trees[0] != trees[1])
      ++rerun_mismatch;
  }
  fs::remove_all(root);
  return {configs.size() >= 10 && code_mismatch == 0 && rerun_mismatch == 0,
          std::to_string(configs.size()) + " configs, " + std::to_string(manifest.size()) + " invocations, " +
              std::to_string(code_mismatch) + " exit-code mismatches, " + std::to_string(rerun_mismatch) +
              " non-identical reruns"};
}

struct Criterion {
  int id;
  const char* name;
  std::function<Outcome()> check;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance checks"};
  std::vector<int> known;
  std::vector<int> only;
  app.add_option("--known-failure", known, "Criterion expected to fail");
  app.add_option("--only", only, "Run only these criteria");
  CLI11_PARSE(app, argc, argv);
  const std::set<int> known_set(known.begin(), known.end()), only_set(only.begin(), only.end());

  const std::vector<Criterion> criteria{
      {1, "viscosity admissibility", viscosity_admissibility},
      {2, "mass conservation", mass_conservation},
      {3, "energy dissipation", energy_dissipation},
      {4, "mono-fluid reduction", mono_fluid_reduction},
      {5, "exchange ODE reduction", ode_reduction},
      {6, "steady solver", steady_solver},
      {7, "divergence identity", divergence_identity},
      {8, "self-adjointness", self_adjointness},
      {9, "comm expansions", comm_expansions},
      {10, "weak-limit experiment", weak_limit},
      {11, "cut-off properties", cutoff_suite},
      {12, "CLI determinism and exit codes", cli_contract},
  };

  int unexpected = 0;
  for (const auto& c : criteria) {
    if (!only_set.empty() && !only_set.count(c.id)) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool known_failure = known_set.count(c.id) > 0;
    std::cout << (o.pass ? "[PASS] " : "[FAIL] ") << c.id << " " << c.name << ": " << o.detail << " ("
              << fmt(secs) << " s)" << (known_failure ? (o.pass ? " [known failure now passes]" : " [known failure]") : "")
              << std::endl;
    if (o.pass == known_failure) ++unexpected;
  }
  std::cout << (unexpected == 0 ? "acceptance: as expected" : "acceptance: " + std::to_string(unexpected) + " unexpected")
            << std::endl;
  return unexpected == 0 ? 0 : 1;
}
