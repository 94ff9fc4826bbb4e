#pragma once

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <sstream>
#include <vector>

#include "multiflow/block_tridiagonal.hpp"
#include "multiflow/errors.hpp"
#include "multiflow/grid.hpp"
#include "multiflow/mixture.hpp"
#include "multiflow/pressure.hpp"
#include "multiflow/viscosity.hpp"

namespace multiflow {

/// Densities and velocities of N constituents on a 1D grid.
struct MixtureState {
  Grid1D grid;
  ModelVariant variant = ModelVariant::Modified;
  std::vector<Field> rho;
  std::vector<Field> u;

  int n_constituents() const noexcept { return static_cast<int>(rho.size()); }

  void validate() const {
    if (rho.empty() || rho.size() != u.size()) {
      throw ConfigError("state needs matching, nonempty density and velocity sets");
    }
    for (std::size_t i = 0; i < rho.size(); ++i) {
      if (static_cast<int>(rho[i].size()) != grid.n_cells || static_cast<int>(u[i].size()) != grid.n_cells) {
        throw ConfigError("state field length does not match the grid");
      }
      for (int c = 0; c < grid.n_cells; ++c) {
        if (!std::isfinite(rho[i][c]) || !std::isfinite(u[i][c])) {
          throw InvalidInputError("state contains NaN or Inf values");
        }
        if (rho[i][c] < 0.0) throw DomainError("state contains negative densities");
      }
    }
  }

  bool operator==(const MixtureState&) const = default;
};

struct SolverConfig {
  double dt_init = 1e-3;  ///< upper bound on the first step
  double dt_max = std::numeric_limits<double>::infinity();
  double cfl_target = 0.5;
  double t_end = 1.0;
  /// Unset: 1e-10 times the mean initial density.
  std::optional<double> density_floor;
  double steady_tol = 1e-10;
  long max_steps = 100000;
  double viscous_solve_tol = 1e-12;
  int cadence = 1;

  void validate() const {
    if (!(dt_init > 0.0)) throw ConfigError("dt_init must be positive");
    if (!(dt_max > 0.0)) throw ConfigError("dt_max must be positive");
    if (!(cfl_target > 0.0 && cfl_target <= 0.9)) throw ConfigError("cfl must lie in (0, 0.9]");
    if (!(t_end >= 0.0)) throw ConfigError("t_end must be nonnegative");
    if (density_floor && !(*density_floor >= 0.0)) throw ConfigError("density floor must be nonnegative");
    if (!(steady_tol > 0.0)) throw ConfigError("steady_tol must be positive");
    if (max_steps < 0) throw ConfigError("max_steps must be nonnegative");
    if (!(viscous_solve_tol > 0.0)) throw ConfigError("viscous_solve_tol must be positive");
    if (cadence < 1) throw ConfigError("output cadence must be at least 1");
  }

  bool operator==(const SolverConfig&) const = default;
};

/// Default floor: 1e-10 times the mean density over constituents and cells.
inline double default_density_floor(const MixtureState& s) {
  double total = 0.0;
  long count = 0;
  for (const auto& r : s.rho) {
    for (double v : r) total += v;
    count += static_cast<long>(r.size());
  }
  return count > 0 ? 1e-10 * total / static_cast<double>(count) : 0.0;
}

inline double resolved_floor(const SolverConfig& cfg, const MixtureState& initial) {
  return cfg.density_floor ? *cfg.density_floor : default_density_floor(initial);
}

/// Total density sum_i rho_i at every cell.
inline Field total_density_field(const MixtureState& s) {
  Field total(s.grid.n_cells);
  std::vector<double> column(s.n_constituents());
  for (int c = 0; c < s.grid.n_cells; ++c) {
    for (int i = 0; i < s.n_constituents(); ++i) column[i] = s.rho[i][c];
    total[c] = total_density(column);
  }
  return total;
}

/// Average velocity v at every cell.
inline Field average_velocity_field(const MixtureState& s) {
  Field v(s.grid.n_cells);
  std::vector<double> column(s.n_constituents());
  for (int c = 0; c < s.grid.n_cells; ++c) {
    for (int i = 0; i < s.n_constituents(); ++i) column[i] = s.u[i][c];
    v[c] = average_velocity(column);
  }
  return v;
}

/// Transport velocity w_i: u_i (Original) or the average velocity v (Modified).
inline std::vector<Field> convection_velocity(const MixtureState& s) {
  if (s.variant == ModelVariant::Original) return s.u;
  return std::vector<Field>(s.n_constituents(), average_velocity_field(s));
}

/// Pressure field acting on constituent i.
inline std::vector<Field> pressure_fields(const MixtureState& s, const MixtureParams& params) {
  const int n = s.grid.n_cells;
  std::vector<Field> p(s.n_constituents(), Field(n));
  if (s.variant == ModelVariant::Modified) {
    const Field total = total_density_field(s);
    Field common(n);
    for (int c = 0; c < n; ++c) common[c] = pressure_eval(params.law(0), total[c]);
    std::fill(p.begin(), p.end(), common);
  } else {
    for (int i = 0; i < s.n_constituents(); ++i)
      for (int c = 0; c < n; ++c) p[i][c] = pressure_eval(params.law(i), s.rho[i][c]);
  }
  return p;
}

struct ContinuityResult {
  bool accepted = true;  ///< false: dt violates the upwind positivity bound
  std::vector<Field> rho;
  long floor_events = 0;
  double courant = 0.0;  ///< max_c dt * (outflow speeds) / dx
};

/// Upwind update of d rho_i/dt + d(rho_i w_i)/dx = 0, followed by flooring.
inline ContinuityResult continuity_step(const MixtureState& s, double dt, double density_floor) {
  const Grid1D& g = s.grid;
  const int n = g.n_cells;
  const auto w = convection_velocity(s);
  ContinuityResult out;
  out.rho = s.rho;
  for (int i = 0; i < s.n_constituents(); ++i) {
    const Field wf = face_velocity(w[i], g);
    for (int c = 0; c < n; ++c) {
      const double outflow = std::max(wf[c + 1], 0.0) + std::max(-wf[c], 0.0);
      out.courant = std::max(out.courant, dt * outflow / g.dx());
    }
    const Field flux = upwind_face_flux(s.rho[i], wf, g);
    for (int c = 0; c < n; ++c) out.rho[i][c] = s.rho[i][c] - dt * (flux[c + 1] - flux[c]) / g.dx();
  }
  if (out.courant > 1.0) {
    out.accepted = false;
    return out;
  }
  for (auto& r : out.rho) {
    for (double& v : r) {
      if (v < density_floor) {
        v = density_floor;
        ++out.floor_events;
      }
    }
  }
  return out;
}

/// Squared sound-speed floor used by the CFL proxy.
inline constexpr double kSoundSpeedFloor2 = 1e-12;

/// Sound-speed proxy c_i at every cell.
inline std::vector<Field> sound_speed(const MixtureState& s, const MixtureParams& params, double density_floor) {
  const int n = s.grid.n_cells;
  const int nc = s.n_constituents();
  std::vector<Field> c2(nc, Field(n));
  if (s.variant == ModelVariant::Modified) {
    const Field total = total_density_field(s);
    const double active = 10.0 * density_floor;
    for (int c = 0; c < n; ++c) {
      double ratio = 0.0;
      for (int i = 0; i < nc; ++i)
        if (s.rho[i][c] > active) ratio += total[c] / s.rho[i][c];
      const double value = pressure_derivative(params.law(0), total[c]) * (ratio / nc);
      for (int i = 0; i < nc; ++i) c2[i][c] = value;
    }
  } else {
    for (int i = 0; i < nc; ++i)
      for (int c = 0; c < n; ++c) c2[i][c] = pressure_derivative(params.law(i), s.rho[i][c]);
  }
  for (auto& f : c2)
    for (double& v : f) v = std::sqrt(std::max(v, kSoundSpeedFloor2));
  return c2;
}

/// dt = cfl * dx / max(|w_i| + c_i), capped by dt_max.
inline double cfl_dt(const MixtureState& s, const MixtureParams& params, const SolverConfig& cfg,
                     double density_floor = 0.0) {
  const auto w = convection_velocity(s);
  const auto c = sound_speed(s, params, density_floor);
  double speed = 0.0;
  for (int i = 0; i < s.n_constituents(); ++i)
    for (int k = 0; k < s.grid.n_cells; ++k) speed = std::max(speed, std::abs(w[i][k]) + c[i][k]);
  return std::min(cfg.cfl_target * s.grid.dx() / speed, cfg.dt_max);
}

struct MomentumResult {
  std::vector<Field> u;
  double solve_residual = 0.0;
  long skipped_cells = 0;  ///< constituent-cells below 10 * floor left untouched
};

/**
 * Operator-split momentum update, given the old state and the densities
 * produced by continuity_step:
 *  1. explicit upwind convection of rho_i u_i with the continuity mass flux,
 *     pressure gradient (post-continuity densities) and body force;
 *  2. exact per-cell integration of the exchange ODE rho_i du_i/dt = J_i(u);
 *  3. implicit coupled viscous solve rho_i u_i - dt sum_k nu_ik u_k'' = rhs_i
 *     as one block tridiagonal (cyclic when periodic) system.
 */
inline MomentumResult momentum_step(const MixtureState& before, const std::vector<Field>& rho_new, double dt,
                                    double t, const MixtureParams& params, const SolverConfig& cfg,
                                    double density_floor) {
  const Grid1D& g = before.grid;
  const int n = g.n_cells;
  const int nc = before.n_constituents();
  const double dx = g.dx();
  if (static_cast<int>(rho_new.size()) != nc) throw ConfigError("momentum_step: density set size mismatch");
  for (const auto& r : rho_new)
    for (double v : r)
      if (v < 0.0) throw InternalError("momentum_step: negative density (continuity_step must run first)");

  const double active_threshold = 10.0 * density_floor;
  auto active = [&](int i, int c) { return rho_new[i][c] > active_threshold; };

  MixtureState post = before;
  post.rho = rho_new;
  const auto pressure = pressure_fields(post, params);
  const auto w = convection_velocity(before);

  MomentumResult out;
  std::vector<Field> u_star(nc, Field(n));
  for (int i = 0; i < nc; ++i) {
    const Field wf = face_velocity(w[i], g);
    const Field mass_flux = upwind_face_flux(before.rho[i], wf, g);
    Field mom_flux(n + 1);
    for (int k = 0; k <= n; ++k) {
      const double upwind_u = wf[k] >= 0.0 ? detail::ghosted(before.u[i], g, k - 1, Ghost::Odd)
                                           : detail::ghosted(before.u[i], g, k, Ghost::Odd);
      mom_flux[k] = mass_flux[k] * upwind_u;
    }
    const Field dpdx = ddx_central(pressure[i], g, Ghost::Even);
    for (int c = 0; c < n; ++c) {
      if (!active(i, c)) {
        u_star[i][c] = before.u[i][c];
        continue;
      }
      const double momentum = before.rho[i][c] * before.u[i][c] - dt * (mom_flux[c + 1] - mom_flux[c]) / dx -
                              dt * dpdx[c] + dt * before.rho[i][c] * params.body_force(i, g.x(c), t);
      u_star[i][c] = momentum / rho_new[i][c];
    }
  }

  if (before.variant == ModelVariant::Original && params.has_exchange()) {
    const Matrix gen = params.exchange->generator();
    Matrix rate(nc, nc);
    Vector uc(nc);
    for (int c = 0; c < n; ++c) {
      for (int i = 0; i < nc; ++i) {
        rate.row(i) = active(i, c) ? Eigen::RowVectorXd(gen.row(i) / rho_new[i][c])
                                   : Eigen::RowVectorXd::Zero(nc);
        uc(i) = u_star[i][c];
      }
      const Vector evolved = (dt * rate).exp() * uc;
      for (int i = 0; i < nc; ++i) u_star[i][c] = evolved(i);
    }
  }

  const double alpha = dt / (dx * dx);
  const Matrix& nu = params.visc.nu();
  BlockTridiagonal sys(n, nc, g.periodic());
  Eigen::VectorXd rhs(static_cast<Eigen::Index>(n) * nc);
  for (int c = 0; c < n; ++c) {
    const bool wall = !g.periodic() && (c == 0 || c == n - 1);
    // odd wall ghost: u_{-1} = -u_0 turns the 2 into a 3
    Matrix d = (wall ? 3.0 : 2.0) * alpha * nu;
    Matrix lo = -alpha * nu;
    Matrix up = -alpha * nu;
    for (int i = 0; i < nc; ++i) {
      d(i, i) += rho_new[i][c];
      rhs(c * nc + i) = rho_new[i][c] * u_star[i][c];
      if (!active(i, c)) {
        d.row(i).setZero();
        lo.row(i).setZero();
        up.row(i).setZero();
        d(i, i) = 1.0;
        rhs(c * nc + i) = before.u[i][c];
        ++out.skipped_cells;
      }
    }
    sys.diag[c] = d;
    if (c > 0 || g.periodic()) sys.lower[c] = lo;
    if (c + 1 < n || g.periodic()) sys.upper[c] = up;
  }
  const BlockSolveResult solved = solve_block_tridiagonal(sys, rhs, cfg.viscous_solve_tol);
  out.solve_residual = solved.relative_residual;
  out.u.assign(nc, Field(n));
  for (int c = 0; c < n; ++c)
    for (int i = 0; i < nc; ++i) out.u[i][c] = solved.x(c * nc + i);
  return out;
}

/// Scalar budget of one state.
struct StepDiagnostics {
  double t = 0.0;
  std::vector<double> masses;
  double kinetic = 0.0;
  double potential = 0.0;
  double dissipation = 0.0;  ///< integral of sum_ij nu_ij u_j' u_i' (discrete, face-based)
  double momentum = 0.0;     ///< sum_i int rho_i u_i
  double exchange_imbalance = 0.0;  ///< max_c |sum_i J_i| / max_c ||J||_inf (0 if J = 0)
  long floor_events = 0;            ///< cumulative
  double energy() const { return kinetic + potential; }
};

namespace detail {

inline double potential_density(const PressureLaw& law, double rho) {
  if (rho <= 0.0) return law.is_polytropic() ? 0.0 : pressure_potential(law, std::numeric_limits<double>::min());
  return pressure_potential(law, rho);
}

}  // namespace detail

/**
 * Energy E = kinetic + potential with potential N * int P(rho) for the Modified
 * model (the common pressure acts on all N momentum equations) and
 * sum_i int P_i(rho_i) for the Original model.
 */
inline StepDiagnostics compute_diagnostics(const MixtureState& s, const MixtureParams& params, double t = 0.0) {
  const Grid1D& g = s.grid;
  const int n = g.n_cells;
  const int nc = s.n_constituents();
  const double dx = g.dx();
  StepDiagnostics d;
  d.t = t;
  for (int i = 0; i < nc; ++i) {
    d.masses.push_back(integrate(s.rho[i], g));
    double ke = 0.0;
    double mom = 0.0;
    for (int c = 0; c < n; ++c) {
      ke += 0.5 * s.rho[i][c] * s.u[i][c] * s.u[i][c];
      mom += s.rho[i][c] * s.u[i][c];
    }
    d.kinetic += ke * dx;
    d.momentum += mom * dx;
  }
  if (s.variant == ModelVariant::Modified) {
    const Field total = total_density_field(s);
    double pot = 0.0;
    for (double r : total) pot += detail::potential_density(params.law(0), r);
    d.potential = static_cast<double>(nc) * pot * dx;
  } else {
    for (int i = 0; i < nc; ++i) {
      double pot = 0.0;
      for (double r : s.rho[i]) pot += detail::potential_density(params.law(i), r);
      d.potential += pot * dx;
    }
  }
  std::vector<Field> grads;
  for (int i = 0; i < nc; ++i) grads.push_back(face_gradient(s.u[i], g));
  std::vector<double> gf(nc);
  const int faces = g.periodic() ? n : n + 1;
  double diss = 0.0;
  for (int k = 0; k < faces; ++k) {
    for (int i = 0; i < nc; ++i) gf[i] = grads[i][k];
    const double weight = (!g.periodic() && (k == 0 || k == n)) ? 0.5 : 1.0;
    diss += weight * dissipation_density(gf, params.visc);
  }
  d.dissipation = diss * dx;

  if (params.exchange && s.variant == ModelVariant::Original) {
    std::vector<double> uc(nc);
    double worst_sum = 0.0;
    double scale = 0.0;
    for (int c = 0; c < n; ++c) {
      for (int i = 0; i < nc; ++i) uc[i] = s.u[i][c];
      const auto j = momentum_exchange(uc, *params.exchange);
      double sum = 0.0;
      for (double v : j) {
        sum += v;
        scale = std::max(scale, std::abs(v));
      }
      worst_sum = std::max(worst_sum, std::abs(sum));
    }
    d.exchange_imbalance = scale > 0.0 ? worst_sum / scale : 0.0;
  }
  return d;
}

struct StepOutcome {
  MixtureState state;
  double dt = 0.0;
  StepDiagnostics diagnostics;
  long floor_events = 0;  ///< this step only
  double solve_residual = 0.0;
  int rejections = 0;
};

/**
 * One accepted step: continuity_step then momentum_step with dt from cfl_dt
 * (capped by dt_cap). Rejected steps halve dt; TimeStepUnderflow after the
 * step falls below 1e-12 of its first trial value.
 */
inline StepOutcome advance(const MixtureState& s, const MixtureParams& params, const SolverConfig& cfg, double t,
                           double density_floor, double dt_cap = std::numeric_limits<double>::infinity()) {
  StepOutcome out;
  const double dt_first = std::min(cfl_dt(s, params, cfg, density_floor), dt_cap);
  if (!(dt_first > 0.0) || !std::isfinite(dt_first)) throw TimeStepUnderflow("advance: no admissible time step");
  double dt = dt_first;
  for (;;) {
    ContinuityResult cont = continuity_step(s, dt, density_floor);
    if (cont.accepted) {
      MomentumResult mom = momentum_step(s, cont.rho, dt, t, params, cfg, density_floor);
      out.state = s;
      out.state.rho = std::move(cont.rho);
      out.state.u = std::move(mom.u);
      out.dt = dt;
      out.floor_events = cont.floor_events;
      out.solve_residual = mom.solve_residual;
      out.diagnostics = compute_diagnostics(out.state, params, t + dt);
      return out;
    }
    ++out.rejections;
    dt *= 0.5;
    if (dt < 1e-12 * dt_first) {
      std::ostringstream msg;
      msg << "advance: time step underflow after " << out.rejections << " rejections at t = " << t;
      throw TimeStepUnderflow(msg.str());
    }
  }
}

/// Snapshots and scalar series at the configured cadence, plus per-step invariant extremes.
struct Trajectory {
  std::vector<double> times;
  std::vector<MixtureState> snapshots;
  std::vector<StepDiagnostics> series;
  long steps = 0;
  long floor_events = 0;
  double max_energy_increase = 0.0;  ///< max over steps of E(n+1) - E(n)
  double min_dissipation = std::numeric_limits<double>::infinity();
  double max_solve_residual = 0.0;
  double max_exchange_imbalance = 0.0;
  double dissipation_integral = 0.0;  ///< trapezoidal sum over every step
  bool reached_end = false;
};

inline void check_run_inputs(const MixtureState& initial, const MixtureParams& params, const SolverConfig& cfg) {
  initial.validate();
  params.validate();
  cfg.validate();
  if (initial.n_constituents() != params.n_constituents || initial.variant != params.variant) {
    throw ConfigError("state and parameters disagree on constituents or model variant");
  }
  if (initial.grid.n_cells < 3) throw ConfigError("solver grid needs at least 3 cells");
  if (!validate_viscosity(params.visc).admissible) {
    throw ConfigError("viscosity matrices are not admissible");
  }
}

/// Time marching on (0, t_end) until t_end or max_steps.
inline Trajectory run_unsteady(const MixtureState& initial, const MixtureParams& params, const SolverConfig& cfg) {
  check_run_inputs(initial, params, cfg);
  const double floor = resolved_floor(cfg, initial);
  Trajectory traj;
  MixtureState state = initial;
  double t = 0.0;
  StepDiagnostics last = compute_diagnostics(state, params, t);
  traj.times.push_back(t);
  traj.snapshots.push_back(state);
  traj.series.push_back(last);
  const double t_stop = cfg.t_end * (1.0 - 1e-14);
  bool recorded_last = true;
  while (t < t_stop && traj.steps < cfg.max_steps) {
    double cap = cfg.t_end - t;
    if (traj.steps == 0) cap = std::min(cap, cfg.dt_init);
    StepOutcome step = advance(state, params, cfg, t, floor, cap);
    t += step.dt;
    ++traj.steps;
    traj.floor_events += step.floor_events;
    step.diagnostics.t = t;
    step.diagnostics.floor_events = traj.floor_events;
    traj.max_energy_increase = std::max(traj.max_energy_increase, step.diagnostics.energy() - last.energy());
    traj.min_dissipation = std::min(traj.min_dissipation, step.diagnostics.dissipation);
    traj.max_solve_residual = std::max(traj.max_solve_residual, step.solve_residual);
    traj.max_exchange_imbalance = std::max(traj.max_exchange_imbalance, step.diagnostics.exchange_imbalance);
    traj.dissipation_integral += 0.5 * step.dt * (last.dissipation + step.diagnostics.dissipation);
    state = std::move(step.state);
    last = step.diagnostics;
    recorded_last = traj.steps % cfg.cadence == 0;
    if (recorded_last) {
      traj.times.push_back(t);
      traj.snapshots.push_back(state);
      traj.series.push_back(last);
    }
  }
  if (!recorded_last) {
    traj.times.push_back(t);
    traj.snapshots.push_back(state);
    traj.series.push_back(last);
  }
  traj.reached_end = t >= t_stop;
  return traj;
}

struct SteadyResult {
  MixtureState state;
  std::vector<double> residual_history;
  bool converged = false;
  long steps = 0;
  long floor_events = 0;
  double pseudo_time = 0.0;
  std::vector<double> initial_masses;
  /// |int rho_i dv/dx| per constituent at the final state.
  std::vector<double> steady_diagnostic;
  double final_residual() const {
    return residual_history.empty() ? std::numeric_limits<double>::infinity() : residual_history.back();
  }
};

/// |int rho_i dv/dx| for each constituent.
inline std::vector<double> steady_divergence_diagnostic(const MixtureState& s) {
  const Field v = average_velocity_field(s);
  const Field dv = ddx_central(v, s.grid, Ghost::Odd);
  std::vector<double> out;
  for (const auto& r : s.rho) {
    Field prod(r.size());
    for (std::size_t c = 0; c < r.size(); ++c) prod[c] = r[c] * dv[c];
    out.push_back(std::abs(integrate(prod, s.grid)));
  }
  return out;
}

/**
 * Pseudo-time march to a steady state of the NoSlip problem. The residual is
 * max over constituents and cells of |d rho_i/dt| and |d(rho_i u_i)/dt|
 * measured across one step. Per-constituent masses stay at their initial
 * values (rescaled after any step that floors densities). Non-convergence
 * returns the last state with converged = false.
 */
inline SteadyResult run_steady(const MixtureState& initial, const MixtureParams& params, const SolverConfig& cfg) {
  check_run_inputs(initial, params, cfg);
  if (initial.grid.bc != Boundary::NoSlip) throw ConfigError("steady solver requires NoSlip boundaries");
  const double floor = resolved_floor(cfg, initial);
  SteadyResult out;
  out.state = initial;
  for (const auto& r : initial.rho) out.initial_masses.push_back(integrate(r, initial.grid));
  const int nc = initial.n_constituents();
  const int n = initial.grid.n_cells;
  while (out.steps < cfg.max_steps) {
    const double cap = out.steps == 0 ? std::min(cfg.dt_init, cfg.dt_max) : cfg.dt_max;
    StepOutcome step = advance(out.state, params, cfg, out.pseudo_time, floor, cap);
    ++out.steps;
    out.pseudo_time += step.dt;
    out.floor_events += step.floor_events;
    if (step.floor_events > 0) {
      for (int i = 0; i < nc; ++i) {
        const double mass = integrate(step.state.rho[i], step.state.grid);
        if (mass > 0.0)
          for (double& v : step.state.rho[i]) v *= out.initial_masses[i] / mass;
      }
    }
    double residual = 0.0;
    for (int i = 0; i < nc; ++i) {
      for (int c = 0; c < n; ++c) {
        const double drho = std::abs(step.state.rho[i][c] - out.state.rho[i][c]) / step.dt;
        const double dm = std::abs(step.state.rho[i][c] * step.state.u[i][c] -
                                   out.state.rho[i][c] * out.state.u[i][c]) /
                          step.dt;
        residual = std::max({residual, drho, dm});
      }
    }
    out.residual_history.push_back(residual);
    out.state = std::move(step.state);
    if (residual < cfg.steady_tol) {
      out.converged = true;
      break;
    }
  }
  out.steady_diagnostic = steady_divergence_diagnostic(out.state);
  return out;
}

}  // namespace multiflow
