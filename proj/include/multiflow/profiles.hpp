#pragma once

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "multiflow/errors.hpp"
#include "multiflow/mixture.hpp"
#include "multiflow/solver.hpp"
#include "multiflow/spectral.hpp"

namespace multiflow {

/// Named 1D profile g(x) on (0, L): uniform, sine or gaussian.
struct ProfileSpec {
  std::string name = "uniform";
  std::vector<double> params{0.0};

  bool operator==(const ProfileSpec&) const = default;
};

namespace detail {

struct ProfileShape {
  const char* name;
  std::size_t min_params;
  std::size_t max_params;
  const char* usage;
};

inline constexpr ProfileShape kProfileShapes[] = {
    {"uniform", 1, 1, "uniform <value>"},
    {"sine", 3, 4, "sine <mean> <amplitude> <wavenumber> [phase]"},
    {"gaussian", 4, 4, "gaussian <base> <amplitude> <center> <width>"},
};

inline const ProfileShape* find_shape(const std::string& name) {
  for (const auto& s : kProfileShapes)
    if (name == s.name) return &s;
  return nullptr;
}

}  // namespace detail

/// Throws ConfigError for unknown names, wrong parameter counts or non-finite values.
inline void validate_profile(const ProfileSpec& p) {
  const auto* shape = detail::find_shape(p.name);
  if (!shape) throw ConfigError("unknown profile '" + p.name + "' (known: uniform, sine, gaussian)");
  if (p.params.size() < shape->min_params || p.params.size() > shape->max_params) {
    std::ostringstream msg;
    msg << "profile '" << p.name << "' takes " << shape->usage << ", got " << p.params.size() << " parameters";
    throw ConfigError(msg.str());
  }
  for (double v : p.params)
    if (!std::isfinite(v)) throw InvalidInputError("profile '" + p.name + "' has a non-finite parameter");
  if (p.name == "gaussian" && !(p.params[3] > 0.0)) throw ConfigError("gaussian profile width must be positive");
}

inline double evaluate_profile(const ProfileSpec& p, double x, double length) {
  if (p.name == "uniform") return p.params[0];
  if (p.name == "sine") {
    const double phase = p.params.size() > 3 ? p.params[3] : 0.0;
    return p.params[0] + p.params[1] * std::sin(2.0 * std::numbers::pi * p.params[2] * x / length + phase);
  }
  if (p.name == "gaussian") {
    const double z = (x - p.params[2]) / p.params[3];
    return p.params[0] + p.params[1] * std::exp(-0.5 * z * z);
  }
  throw ConfigError("unknown profile '" + p.name + "'");
}

inline Field sample_profile(const ProfileSpec& p, const Grid1D& grid) {
  validate_profile(p);
  Field f(grid.n_cells);
  for (int c = 0; c < grid.n_cells; ++c) f[c] = evaluate_profile(p, grid.x(c), grid.length);
  return f;
}

// ---------------------------------------------------------------------------
// Manufactured solutions on a periodic interval.

/// Value and derivatives of one analytic field at a point.
struct Jet {
  double value = 0.0;
  double dt = 0.0;
  double dx = 0.0;
  double dxx = 0.0;
};

/**
 * Catalog of exact periodic solutions (rho*, u*) for either model variant:
 *
 *  constant:        rho_i = rho0_i, u_i = q_i.
 *  decaying_sine:   rho_i = rho0_i, u_i = U sin(2 pi x / L) exp(-t). The mass
 *                   equations are not satisfied; only the forcing is exact.
 *  traveling_wave:  phi = 1 + A sin(xi), xi = kappa (x - c t), rho_i = rho0_i phi.
 *                   Original: u_i = c + q_i / phi.
 *                   Modified: u_i = c + qbar / phi + (q_i - qbar) sin(xi),
 *                   so the average velocity carries every constituent.
 */
struct ManufacturedCase {
  enum class Kind { Constant, DecayingSine, TravelingWave };
  Kind kind = Kind::TravelingWave;
  double length = 1.0;
  std::vector<double> rho0{1.0};
  std::vector<double> q{0.0};  ///< per-constituent velocity parameters
  double amplitude = 0.2;      ///< A (traveling_wave) or U (decaying_sine)
  double speed = 1.0;          ///< c
  int wavenumber = 1;

  static ManufacturedCase by_name(const std::string& name, int n_constituents) {
    ManufacturedCase mc;
    mc.rho0.assign(n_constituents, 1.0);
    mc.q.assign(n_constituents, 0.0);
    if (name == "constant") {
      mc.kind = Kind::Constant;
      for (int i = 0; i < n_constituents; ++i) {
        mc.rho0[i] = 1.0 + 0.25 * i;
        mc.q[i] = 0.5 - 0.25 * i;
      }
    } else if (name == "decaying_sine") {
      mc.kind = Kind::DecayingSine;
      mc.amplitude = 1.0;
    } else if (name == "traveling_wave") {
      mc.kind = Kind::TravelingWave;
      for (int i = 0; i < n_constituents; ++i) {
        mc.rho0[i] = 1.0 + 0.5 * i;
        mc.q[i] = 0.3 - 0.2 * i;
      }
    } else {
      throw ConfigError("unknown manufactured case '" + name + "' (known: constant, decaying_sine, traveling_wave)");
    }
    return mc;
  }

  int n_constituents() const { return static_cast<int>(rho0.size()); }
  bool satisfies_continuity() const { return kind != Kind::DecayingSine; }

  Jet rho(int i, double x, double t) const {
    const double kappa = 2.0 * std::numbers::pi * wavenumber / length;
    switch (kind) {
      case Kind::Constant:
      case Kind::DecayingSine: return {rho0[i], 0.0, 0.0, 0.0};
      case Kind::TravelingWave: {
        const double xi = kappa * (x - speed * t);
        const double s = std::sin(xi), co = std::cos(xi);
        const double a = amplitude * rho0[i];
        return {rho0[i] + a * s, -speed * kappa * a * co, kappa * a * co, -kappa * kappa * a * s};
      }
    }
    throw InternalError("ManufacturedCase: unhandled kind");
  }

  Jet u(int i, double x, double t, ModelVariant variant) const {
    const double kappa = 2.0 * std::numbers::pi * wavenumber / length;
    switch (kind) {
      case Kind::Constant: return {q[i], 0.0, 0.0, 0.0};
      case Kind::DecayingSine: {
        const double e = amplitude * std::exp(-t);
        const double s = std::sin(kappa * x), co = std::cos(kappa * x);
        return {e * s, -e * s, kappa * e * co, -kappa * kappa * e * s};
      }
      case Kind::TravelingWave: {
        const double xi = kappa * (x - speed * t);
        const double s = std::sin(xi), co = std::cos(xi);
        const double phi = 1.0 + amplitude * s;
        const double phi_x = kappa * amplitude * co;
        const double phi_xx = -kappa * kappa * amplitude * s;
        double qbar = 0.0;
        for (double v : q) qbar += v;
        qbar /= n_constituents();
        const double m = variant == ModelVariant::Original ? q[i] : qbar;
        const double d = variant == ModelVariant::Original ? 0.0 : q[i] - qbar;
        // m / phi part
        const double g = m / phi;
        const double g_x = -m * phi_x / (phi * phi);
        const double g_xx = m * (2.0 * phi_x * phi_x / (phi * phi * phi) - phi_xx / (phi * phi));
        const Jet out{speed + g + d * s, 0.0, g_x + d * kappa * co, g_xx - d * kappa * kappa * s};
        return {out.value, -speed * out.dx, out.dx, out.dxx};
      }
    }
    throw InternalError("ManufacturedCase: unhandled kind");
  }

  MixtureState initial_state(const Grid1D& grid, ModelVariant variant) const {
    if (!grid.periodic()) throw ConfigError("manufactured cases live on periodic grids");
    MixtureState s;
    s.grid = grid;
    s.variant = variant;
    s.rho.assign(n_constituents(), Field(grid.n_cells));
    s.u.assign(n_constituents(), Field(grid.n_cells));
    for (int i = 0; i < n_constituents(); ++i) {
      for (int c = 0; c < grid.n_cells; ++c) {
        s.rho[i][c] = rho(i, grid.x(c), 0.0).value;
        s.u[i][c] = u(i, grid.x(c), 0.0, variant).value;
      }
    }
    return s;
  }
};

namespace detail {

inline void require_case_matches(const ManufacturedCase& mc, const MixtureParams& params) {
  if (mc.n_constituents() != params.n_constituents || static_cast<int>(mc.q.size()) != params.n_constituents) {
    throw ConfigError("manufactured case and parameters disagree on the number of constituents");
  }
}

/// Momentum-equation terms other than the body force, at one point:
/// d_t(rho_i u_i) + d_x(rho_i w_i u_i) + d_x p_i - sum_k nu_ik d_xx u_k - J_i.
inline std::vector<double> manufactured_momentum_terms(const ManufacturedCase& mc, const MixtureParams& params,
                                                       double x, double t) {
  const int n = params.n_constituents;
  std::vector<Jet> r(n), u(n);
  for (int i = 0; i < n; ++i) {
    r[i] = mc.rho(i, x, t);
    u[i] = mc.u(i, x, t, params.variant);
  }
  Jet w_mean;
  for (int i = 0; i < n; ++i) {
    w_mean.value += u[i].value / n;
    w_mean.dx += u[i].dx / n;
  }
  std::vector<double> dpdx(n);
  if (params.variant == ModelVariant::Modified) {
    double total = 0.0, total_x = 0.0;
    for (int i = 0; i < n; ++i) {
      total += r[i].value;
      total_x += r[i].dx;
    }
    std::fill(dpdx.begin(), dpdx.end(), pressure_derivative(params.law(0), total) * total_x);
  } else {
    for (int i = 0; i < n; ++i) dpdx[i] = pressure_derivative(params.law(i), r[i].value) * r[i].dx;
  }
  std::vector<double> exchange(n, 0.0);
  if (params.variant == ModelVariant::Original && params.exchange) {
    std::vector<double> uv(n);
    for (int i = 0; i < n; ++i) uv[i] = u[i].value;
    exchange = momentum_exchange(uv, *params.exchange);
  }
  std::vector<double> out(n);
  for (int i = 0; i < n; ++i) {
    const double w = params.variant == ModelVariant::Original ? u[i].value : w_mean.value;
    const double w_x = params.variant == ModelVariant::Original ? u[i].dx : w_mean.dx;
    const double time = r[i].dt * u[i].value + r[i].value * u[i].dt;
    const double conv = r[i].dx * w * u[i].value + r[i].value * w_x * u[i].value + r[i].value * w * u[i].dx;
    double visc = 0.0;
    for (int k = 0; k < n; ++k) visc += params.visc.nu()(i, k) * u[k].dxx;
    out[i] = time + conv + dpdx[i] - visc - exchange[i];
  }
  return out;
}

}  // namespace detail

/// Body-force acceleration f_i(x, t) that makes the case an exact solution.
/// The solver adds rho_i f_i to the momentum balance.
inline BodyForce manufactured_forcing(const ManufacturedCase& mc, ModelVariant variant, MixtureParams params) {
  detail::require_case_matches(mc, params);
  params.variant = variant;
  params.validate();
  return [mc, params](int i, double x, double t) {
    const auto terms = detail::manufactured_momentum_terms(mc, params, x, t);
    return terms.at(i) / mc.rho(i, x, t).value;
  };
}

/// Spectral derivative of samples on a uniform periodic grid of length L.
inline std::vector<double> spectral_ddx_1d(const std::vector<double>& f, double length) {
  const int n = static_cast<int>(f.size());
  if (n < 4 || n % 2 != 0) throw ConfigError("spectral_ddx_1d: need an even number of at least 4 samples");
  std::vector<double> in(f);
  std::vector<std::complex<double>> spec(n / 2 + 1);
  std::vector<double> out(n);
  {
    std::lock_guard<std::mutex> lock(detail::fftw_planner_mutex());
    fftw_plan fwd = fftw_plan_dft_r2c_1d(n, in.data(), reinterpret_cast<fftw_complex*>(spec.data()), FFTW_ESTIMATE);
    fftw_execute(fwd);
    fftw_destroy_plan(fwd);
    const double base = 2.0 * std::numbers::pi / length;
    for (int k = 0; k <= n / 2; ++k) {
      const double kk = k == n / 2 ? 0.0 : base * k;
      spec[k] *= std::complex<double>(0.0, kk) / static_cast<double>(n);
    }
    fftw_plan bwd = fftw_plan_dft_c2r_1d(n, reinterpret_cast<fftw_complex*>(spec.data()), out.data(), FFTW_ESTIMATE);
    fftw_execute(bwd);
    fftw_destroy_plan(bwd);
  }
  return out;
}

struct ManufacturedResidual {
  double momentum = 0.0;    ///< max_i,c |momentum residual|
  double continuity = 0.0;  ///< max_i,c |d_t rho_i + d_x(rho_i w_i)|, 0 if the case does not claim it
};

/**
 * Substitutes the case into the governing equations with spectral space
 * derivatives of sampled fluxes and fourth-order central time differences,
 * on n uniform points at time t.
 */
inline ManufacturedResidual manufactured_residual(const ManufacturedCase& mc, const MixtureParams& params_in,
                                                  const BodyForce& force, int n, double t) {
  MixtureParams params = params_in;
  detail::require_case_matches(mc, params);
  const int nc = params.n_constituents;
  const double h = 1e-3;
  const double dx = mc.length / n;
  auto sample = [&](auto&& fn) {
    std::vector<double> v(n);
    for (int c = 0; c < n; ++c) v[c] = fn(c * dx);
    return v;
  };
  auto w_value = [&](int i, double x, double tt) {
    if (params.variant == ModelVariant::Original) return mc.u(i, x, tt, params.variant).value;
    double s = 0.0;
    for (int k = 0; k < nc; ++k) s += mc.u(k, x, tt, params.variant).value;
    return s / nc;
  };
  auto time_derivative = [&](auto&& fn, double x) {
    return (-fn(x, t + 2 * h) + 8.0 * fn(x, t + h) - 8.0 * fn(x, t - h) + fn(x, t - 2 * h)) / (12.0 * h);
  };
  ManufacturedResidual out;
  std::vector<std::vector<double>> u(nc);
  for (int k = 0; k < nc; ++k) u[k] = sample([&](double x) { return mc.u(k, x, t, params.variant).value; });
  std::vector<double> total = sample([&](double x) {
    double s = 0.0;
    for (int k = 0; k < nc; ++k) s += mc.rho(k, x, t).value;
    return s;
  });
  for (int i = 0; i < nc; ++i) {
    const auto rho = sample([&](double x) { return mc.rho(i, x, t).value; });
    const auto flux = sample([&](double x) { return mc.rho(i, x, t).value * w_value(i, x, t); });
    std::vector<double> mom_flux(n), p(n);
    for (int c = 0; c < n; ++c) {
      mom_flux[c] = flux[c] * u[i][c];
      p[c] = params.variant == ModelVariant::Modified ? pressure_eval(params.law(0), total[c])
                                                      : pressure_eval(params.law(i), rho[c]);
    }
    const auto dflux = spectral_ddx_1d(flux, mc.length);
    const auto dmom = spectral_ddx_1d(mom_flux, mc.length);
    const auto dp = spectral_ddx_1d(p, mc.length);
    std::vector<double> visc(n, 0.0);
    for (int k = 0; k < nc; ++k) {
      const double coeff = params.visc.nu()(i, k);
      if (coeff == 0.0) continue;
      const auto uxx = spectral_ddx_1d(spectral_ddx_1d(u[k], mc.length), mc.length);
      for (int c = 0; c < n; ++c) visc[c] += coeff * uxx[c];
    }
    for (int c = 0; c < n; ++c) {
      const double x = c * dx;
      std::vector<double> uc(nc);
      for (int k = 0; k < nc; ++k) uc[k] = u[k][c];
      double exchange = 0.0;
      if (params.variant == ModelVariant::Original && params.exchange) {
        exchange = momentum_exchange(uc, *params.exchange)[i];
      }
      const double dt_mom = time_derivative(
          [&](double xx, double tt) { return mc.rho(i, xx, tt).value * mc.u(i, xx, tt, params.variant).value; }, x);
      const double res = dt_mom + dmom[c] + dp[c] - visc[c] - exchange - rho[c] * force(i, x, t);
      out.momentum = std::max(out.momentum, std::abs(res));
      if (mc.satisfies_continuity()) {
        const double dt_rho = time_derivative([&](double xx, double tt) { return mc.rho(i, xx, tt).value; }, x);
        out.continuity = std::max(out.continuity, std::abs(dt_rho + dflux[c]));
      }
    }
  }
  return out;
}

/// Discrete L2 norm of (state - exact case at time t), all constituents, rho and u.
struct ManufacturedError {
  double rho = 0.0;
  double u = 0.0;
};

inline ManufacturedError manufactured_error(const MixtureState& s, const ManufacturedCase& mc, double t) {
  ManufacturedError e;
  const double dx = s.grid.dx();
  for (int i = 0; i < s.n_constituents(); ++i) {
    for (int c = 0; c < s.grid.n_cells; ++c) {
      const double x = s.grid.x(c);
      const double dr = s.rho[i][c] - mc.rho(i, x, t).value;
      const double du = s.u[i][c] - mc.u(i, x, t, s.variant).value;
      e.rho += dr * dr * dx;
      e.u += du * du * dx;
    }
  }
  e.rho = std::sqrt(e.rho);
  e.u = std::sqrt(e.u);
  return e;
}

}  // namespace multiflow
