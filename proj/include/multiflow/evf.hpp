#pragma once

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <numbers>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "multiflow/errors.hpp"
#include "multiflow/spectral.hpp"
#include "multiflow/viscosity.hpp"

namespace multiflow {

// Effective-viscous-flux laboratory on the 2D torus. All inverse Laplacians
// use the zero-mean convention: mean(f) is dropped before inversion.

inline PeriodicField2D inv_laplacian(const SpectralOps& ops, const PeriodicField2D& f) {
  return ops.inv_laplacian(f);
}

/// R f = grad (x) grad inv_laplacian(f); trace(R f) = f - mean(f).
inline SymTensorField2D riesz_second(const SpectralOps& ops, const PeriodicField2D& f) {
  return {ops.riesz(f, 0, 0), ops.riesz(f, 0, 1), ops.riesz(f, 1, 1)};
}

/// grad inv_laplacian div v, the action of R on vector fields.
inline VectorField2D riesz_vector(const SpectralOps& ops, const VectorField2D& v) {
  return ops.grad(ops.inv_laplacian(ops.div(v)));
}

struct SelfAdjointGap {
  std::array<double, 3> component{};  ///< xx, xy, yy
  double scale = 0.0;                 ///< ||a|| ||b||
  double max() const { return *std::max_element(component.begin(), component.end()); }
  double relative() const { return scale > 0.0 ? max() / scale : max(); }
};

/// |<R_ab a, b> - <a, R_ab b>| per component.
inline SelfAdjointGap check_selfadjoint(const SpectralOps& ops, const PeriodicField2D& a, const PeriodicField2D& b) {
  const SymTensorField2D ra = riesz_second(ops, a);
  const SymTensorField2D rb = riesz_second(ops, b);
  SelfAdjointGap gap;
  gap.component[0] = std::abs(inner(ra.xx, b) - inner(a, rb.xx));
  gap.component[1] = std::abs(inner(ra.xy, b) - inner(a, rb.xy));
  gap.component[2] = std::abs(inner(ra.yy, b) - inner(a, rb.yy));
  gap.scale = l2_norm(a) * l2_norm(b);
  return gap;
}

/// Comm(a, b) = (R a) b - a (R b).
inline SymTensorField2D comm(const SpectralOps& ops, const PeriodicField2D& a, const PeriodicField2D& b) {
  return b * riesz_second(ops, a) - a * riesz_second(ops, b);
}

/// Vector-argument form: Comm(V, b) = (grad inv_lap div V) b - (R b) V.
inline VectorField2D comm(const SpectralOps& ops, const VectorField2D& v, const PeriodicField2D& b) {
  const VectorField2D rv = riesz_vector(ops, v);
  const VectorField2D rb_v = apply(riesz_second(ops, b), v);
  return {rv.x * b - rb_v.x, rv.y * b - rb_v.y};
}

struct IdentityResidual {
  double residual = 0.0;
  double scale = 0.0;
  double relative() const { return scale > 0.0 ? residual / scale : residual; }
};

/**
 * Integrated residual of the stress identity
 *
 *   S:(grad (x) [phi grad tau]) + S:(grad (x) [tau grad phi]) - (div div S) tau phi,
 *
 * with phi = inv_laplacian(rho_j). The integrand is a divergence, so on the
 * torus the integral vanishes up to discretisation error. Scale is
 * ||S|| ||rho_j|| ||tau||.
 */
inline IdentityResidual div_identity_residual(const SpectralOps& ops, const SymTensorField2D& stress,
                                              const PeriodicField2D& rho_j, const PeriodicField2D& tau) {
  const PeriodicField2D phi = ops.inv_laplacian(rho_j);
  auto stress_dot_grad = [&](const VectorField2D& v) {
    const auto jac = ops.jacobian(v);
    return stress.xx * jac[0][0] + stress.xy * (jac[0][1] + jac[1][0]) + stress.yy * jac[1][1];
  };
  const PeriodicField2D first = stress_dot_grad(phi * ops.grad(tau));
  const PeriodicField2D second = stress_dot_grad(tau * ops.grad(phi));
  const VectorField2D div_s = ops.div(stress);
  const PeriodicField2D divdiv = ops.div(div_s);
  const PeriodicField2D third = divdiv * tau * phi;
  IdentityResidual out;
  out.residual = std::abs((first + second - third).integral());
  out.scale = l2_norm(stress) * l2_norm(rho_j) * l2_norm(tau);
  return out;
}

/// F_i = p_i - sum_k nu_ik div u_k, pointwise.
inline std::vector<PeriodicField2D> effective_viscous_flux(const std::vector<PeriodicField2D>& pressure,
                                                           const std::vector<PeriodicField2D>& divu,
                                                           const ViscosityMatrices& visc) {
  const int n = visc.size();
  if (static_cast<int>(pressure.size()) != n || static_cast<int>(divu.size()) != n) {
    throw ConfigError("effective_viscous_flux: field counts do not match the viscosity matrices");
  }
  std::vector<PeriodicField2D> flux;
  flux.reserve(n);
  for (int i = 0; i < n; ++i) {
    PeriodicField2D f = pressure[i];
    for (int k = 0; k < n; ++k) {
      const double coeff = visc.nu()(i, k);
      if (coeff != 0.0) f = f - coeff * divu[k];
    }
    flux.push_back(std::move(f));
  }
  return flux;
}

struct CommExpansionResidual {
  double steady = 0.0;    ///< operator transferred to rho_j w
  double unsteady = 0.0;  ///< operator kept on rho_i u
  double scale = 0.0;     ///< ||w|| ||u|| ||rho_i|| ||rho_j||
  double steady_relative() const { return scale > 0.0 ? steady / scale : steady; }
  double unsteady_relative() const { return scale > 0.0 ? unsteady / scale : unsteady; }
};

/**
 * Residuals of the two expansions of int w . Comm(rho_i u, rho_j):
 *   steady:   int rho_i u . grad inv_lap div(rho_j w) - int (rho_i w (x) u) : R rho_j
 *   unsteady: int rho_j w . grad inv_lap div(rho_i u) - int (rho_i w (x) u) : R rho_j
 * The left side is evaluated through comm(); the right sides term by term.
 */
inline CommExpansionResidual comm_expansion_residual(const SpectralOps& ops, const VectorField2D& w,
                                                     const VectorField2D& u, const PeriodicField2D& rho_i,
                                                     const PeriodicField2D& rho_j) {
  const VectorField2D rho_i_u = rho_i * u;
  const double lhs = dot(w, comm(ops, rho_i_u, rho_j)).integral();
  const SymTensorField2D r_rho_j = riesz_second(ops, rho_j);
  const double tensor_term = (rho_i * dot(w, apply(r_rho_j, u))).integral();
  const double steady_first = dot(rho_i_u, riesz_vector(ops, rho_j * w)).integral();
  const double unsteady_first = dot(rho_j * w, riesz_vector(ops, rho_i_u)).integral();
  CommExpansionResidual out;
  out.steady = std::abs(lhs - (steady_first - tensor_term));
  out.unsteady = std::abs(lhs - (unsteady_first - tensor_term));
  out.scale = l2_norm(w) * l2_norm(u) * l2_norm(rho_i) * l2_norm(rho_j);
  return out;
}

/// T_r(s) = s for s < r, r otherwise.
inline double cutoff(double s, double r) {
  if (!(r > 0.0)) throw DomainError("cutoff: level r must be positive");
  return s < r ? s : r;
}

inline PeriodicField2D cutoff(const PeriodicField2D& f, double r) {
  if (!(r > 0.0)) throw DomainError("cutoff: level r must be positive");
  return f.map([r](double s) { return s < r ? s : r; });
}

/// a_n = a0 + A sin(n k.x), b_n = b0 + B sin(n k.x + phase), n over `indices`.
struct OscillatorySequenceSpec {
  PeriodicField2D a0;
  PeriodicField2D b0;
  double amp_a = 1.0;
  double amp_b = 1.0;
  double phase = 0.0;
  std::array<int, 2> wave{1, 0};
  std::vector<int> indices{4, 8, 16, 32};
};

struct WeakLimitRow {
  int index = 0;
  double product_gap = 0.0;            ///< |<a_n b_n - a0 b0, phi>|
  double corrected_product_gap = 0.0;  ///< same minus the analytic weak-limit correction
  double comm_gap = 0.0;               ///< max_component |<Comm(a_n,b_n) - Comm(a0,b0), phi>|
};

struct WeakLimitTable {
  std::vector<WeakLimitRow> rows;
  double analytic_product_limit = 0.0;  ///< |(A B / 2) cos(phase) int phi|
  double comm_rate_exponent = 0.0;      ///< least-squares slope of log comm_gap vs log n
};

/// Least-squares slope of log(y) against log(x). NaN if any y <= 0.
inline double fitted_rate_exponent(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) return std::nan("");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    if (!(y[k] > 0.0) || !(x[k] > 0.0)) return std::nan("");
    const double lx = std::log(x[k]);
    const double ly = std::log(y[k]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  const double m = static_cast<double>(x.size());
  return (m * sxy - sx * sy) / (m * sxx - sx * sx);
}

/**
 * Pairs oscillating sequences with a test field phi: plain products keep a
 * nonzero defect (the weak limit of sin^2 is 1/2) while the Comm pairing
 * converges to that of the limits.
 */
inline WeakLimitTable weak_limit_experiment(const SpectralOps& ops, const OscillatorySequenceSpec& spec,
                                            const PeriodicField2D& phi) {
  const int n = ops.n();
  if (spec.a0.n() != n || spec.b0.n() != n || phi.n() != n) {
    throw ConfigError("weak_limit_experiment: field sizes do not match the grid");
  }
  if (spec.wave[0] == 0 && spec.wave[1] == 0) throw ConfigError("weak_limit_experiment: wave vector must be nonzero");
  const double kmag = std::hypot(spec.wave[0], spec.wave[1]);
  for (int idx : spec.indices) {
    if (idx < 1 || !(idx * kmag < n / 4.0)) {
      std::ostringstream msg;
      msg << "weak_limit_experiment: oscillation index " << idx << " with |k| = " << kmag
          << " is not resolvable on n = " << n << " (need index*|k| < n/4)";
      throw ConfigError(msg.str());
    }
  }
  WeakLimitTable table;
  const double correction = 0.5 * spec.amp_a * spec.amp_b * std::cos(spec.phase);
  table.analytic_product_limit = std::abs(correction * phi.integral());
  const PeriodicField2D base_product = spec.a0 * spec.b0;
  const SymTensorField2D base_comm = comm(ops, spec.a0, spec.b0);
  std::vector<double> xs, ys;
  for (int idx : spec.indices) {
    const double kx = idx * spec.wave[0];
    const double ky = idx * spec.wave[1];
    const PeriodicField2D osc_a =
        PeriodicField2D::sample(n, [&](double x, double y) { return spec.amp_a * std::sin(kx * x + ky * y); });
    const PeriodicField2D osc_b = PeriodicField2D::sample(
        n, [&](double x, double y) { return spec.amp_b * std::sin(kx * x + ky * y + spec.phase); });
    const PeriodicField2D an = spec.a0 + osc_a;
    const PeriodicField2D bn = spec.b0 + osc_b;
    WeakLimitRow row;
    row.index = idx;
    const PeriodicField2D defect = an * bn - base_product;
    row.product_gap = std::abs(inner(defect, phi));
    row.corrected_product_gap = std::abs(inner(defect, phi) - correction * phi.integral());
    const SymTensorField2D dc = comm(ops, an, bn) - base_comm;
    row.comm_gap = std::max({std::abs(inner(dc.xx, phi)), std::abs(inner(dc.xy, phi)), std::abs(inner(dc.yy, phi))});
    table.rows.push_back(row);
    xs.push_back(idx);
    ys.push_back(row.comm_gap);
  }
  table.comm_rate_exponent = fitted_rate_exponent(xs, ys);
  return table;
}

struct RenormResidual {
  double ibp_residual = 0.0;  ///< |int rho div w + int w . grad rho|
  double rho_div_w = 0.0;     ///< |int rho div w|
  double scale = 0.0;         ///< ||rho|| ||w||
  double relative() const { return scale > 0.0 ? ibp_residual / scale : ibp_residual; }
};

inline RenormResidual renorm_residual(const SpectralOps& ops, const PeriodicField2D& rho, const VectorField2D& w) {
  const double rho_div = (rho * ops.div(w)).integral();
  const double w_grad = dot(w, ops.grad(rho)).integral();
  RenormResidual out;
  out.ibp_residual = std::abs(rho_div + w_grad);
  out.rho_div_w = std::abs(rho_div);
  out.scale = l2_norm(rho) * l2_norm(w);
  return out;
}

/**
 * Seeded smooth periodic field, independent of the sampling grid: a constant
 * plus sums of Poisson kernels P_r(theta) = (1 - r^2) / (1 - 2 r cos(theta) + r^2)
 * along x, y, x + y and x - y. Fourier coefficients decay like r^|k|.
 */
struct SmoothFieldSpec {
  struct Term {
    double coeff = 0.0;
    int kind = 0;  ///< 0: P(x-s0) P(y-s1); 1: P(x+y-s0); 2: P(x-y-s0)
    double shift0 = 0.0;
    double shift1 = 0.0;
  };
  double offset = 0.0;
  double radius = 0.5;
  std::vector<Term> terms;

  static double poisson(double theta, double r) { return (1.0 - r * r) / (1.0 - 2.0 * r * std::cos(theta) + r * r); }

  double operator()(double x, double y) const {
    double v = offset;
    for (const Term& t : terms) {
      switch (t.kind) {
        case 0: v += t.coeff * poisson(x - t.shift0, radius) * poisson(y - t.shift1, radius); break;
        case 1: v += t.coeff * poisson(x + y - t.shift0, radius); break;
        default: v += t.coeff * poisson(x - y - t.shift0, radius); break;
      }
    }
    return v;
  }

  PeriodicField2D sample(int n) const {
    return PeriodicField2D::sample(n, [this](double x, double y) { return (*this)(x, y); });
  }

  /// Value, first and second derivatives in closed form.
  struct Derivatives {
    double value = 0.0, dx = 0.0, dy = 0.0, dxx = 0.0, dxy = 0.0, dyy = 0.0;
  };

  Derivatives derivatives(double x, double y) const {
    const double r = radius;
    auto kernel = [r](double th) {
      const double c = std::cos(th), s = std::sin(th);
      const double d = 1.0 - 2.0 * r * c + r * r;
      const double a = 1.0 - r * r;
      const double p = a / d;
      const double p1 = -a * 2.0 * r * s / (d * d);
      const double p2 = -a * (2.0 * r * c / (d * d) - 8.0 * r * r * s * s / (d * d * d));
      return std::array<double, 3>{p, p1, p2};
    };
    Derivatives out;
    out.value = offset;
    for (const Term& t : terms) {
      if (t.kind == 0) {
        const auto px = kernel(x - t.shift0);
        const auto py = kernel(y - t.shift1);
        out.value += t.coeff * px[0] * py[0];
        out.dx += t.coeff * px[1] * py[0];
        out.dy += t.coeff * px[0] * py[1];
        out.dxx += t.coeff * px[2] * py[0];
        out.dxy += t.coeff * px[1] * py[1];
        out.dyy += t.coeff * px[0] * py[2];
      } else {
        const double sign = t.kind == 1 ? 1.0 : -1.0;
        const auto p = kernel(x + sign * y - t.shift0);
        out.value += t.coeff * p[0];
        out.dx += t.coeff * p[1];
        out.dy += sign * t.coeff * p[1];
        out.dxx += t.coeff * p[2];
        out.dxy += sign * t.coeff * p[2];
        out.dyy += t.coeff * p[2];
      }
    }
    return out;
  }

  /// Terms with coefficients in [-1, 1]; offset added as given.
  static SmoothFieldSpec random(std::mt19937_64& rng, double radius, int n_terms = 4, double offset = 0.0) {
    std::uniform_real_distribution<double> coeff(-1.0, 1.0);
    std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi);
    std::uniform_int_distribution<int> kind(0, 2);
    SmoothFieldSpec spec;
    spec.offset = offset;
    spec.radius = radius;
    for (int k = 0; k < n_terms; ++k) {
      Term t;
      t.coeff = coeff(rng);
      t.kind = kind(rng);
      t.shift0 = angle(rng);
      t.shift1 = angle(rng);
      spec.terms.push_back(t);
    }
    return spec;
  }
};

/**
 * The stress identity with S, rho_j and tau given in closed form: only
 * phi = inv_laplacian(rho_j) is computed spectrally from samples, so the
 * residual measures aliasing and quadrature error and shrinks with n.
 */
inline IdentityResidual div_identity_residual_analytic(const SpectralOps& ops, const SmoothFieldSpec& sxx,
                                                       const SmoothFieldSpec& sxy, const SmoothFieldSpec& syy,
                                                       const SmoothFieldSpec& rho_j, const SmoothFieldSpec& tau) {
  const int n = ops.n();
  const PeriodicField2D rho_samples = rho_j.sample(n);
  const PeriodicField2D phi = ops.inv_laplacian(rho_samples);
  const VectorField2D gphi = ops.grad(phi);
  const auto hphi = ops.jacobian(gphi);
  const double h = 2.0 * std::numbers::pi / n;
  std::vector<double> integrand(static_cast<std::size_t>(n) * n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const double x = i * h, y = j * h;
      const auto a = sxx.derivatives(x, y);
      const auto b = sxy.derivatives(x, y);
      const auto c = syy.derivatives(x, y);
      const auto t = tau.derivatives(x, y);
      const double f = phi(i, j), fx = gphi.x(i, j), fy = gphi.y(i, j);
      const double fxx = hphi[0][0](i, j), fxy = hphi[0][1](i, j), fyy = hphi[1][1](i, j);
      // S:grad(phi grad tau) + S:grad(tau grad phi)
      const double txx = 2.0 * fx * t.dx + f * t.dxx + t.value * fxx;
      const double txy = fx * t.dy + fy * t.dx + f * t.dxy + t.value * fxy;
      const double tyy = 2.0 * fy * t.dy + f * t.dyy + t.value * fyy;
      const double divdiv = a.dxx + 2.0 * b.dxy + c.dyy;
      integrand[static_cast<std::size_t>(j) * n + i] =
          a.value * txx + 2.0 * b.value * txy + c.value * tyy - divdiv * t.value * f;
    }
  }
  IdentityResidual out;
  out.residual = std::abs(PeriodicField2D(n, std::move(integrand)).integral());
  const SymTensorField2D s{sxx.sample(n), sxy.sample(n), syy.sample(n)};
  out.scale = l2_norm(s) * l2_norm(rho_samples) * l2_norm(tau.sample(n));
  return out;
}

/// Structured-text record of one diagnostics run.
struct EvfReport {
  std::vector<PeriodicField2D> effective_fluxes;
  std::vector<std::pair<std::string, double>> metrics;
  std::optional<WeakLimitTable> weak_limit;
  std::string mean_convention = "zero-mean";

  void add(std::string key, double value) { metrics.emplace_back(std::move(key), value); }

  /// key=value lines, doubles at 17 significant digits.
  std::string render() const {
    auto num = [](double v) {
      char buf[64];
      auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
      return std::string(buf, res.ptr);
    };
    std::ostringstream out;
    out << "inverse_laplacian_convention=" << mean_convention << '\n';
    for (const auto& [key, value] : metrics) out << key << '=' << num(value) << '\n';
    for (std::size_t i = 0; i < effective_fluxes.size(); ++i) {
      out << "effective_flux_" << i + 1 << "_mean=" << num(effective_fluxes[i].mean()) << '\n';
      out << "effective_flux_" << i + 1 << "_max_abs=" << num(effective_fluxes[i].max_abs()) << '\n';
    }
    if (weak_limit) {
      out << "weak_limit_analytic_product_limit=" << num(weak_limit->analytic_product_limit) << '\n';
      out << "weak_limit_comm_rate_exponent=" << num(weak_limit->comm_rate_exponent) << '\n';
      for (const auto& row : weak_limit->rows) {
        out << "weak_limit_row index=" << row.index << " product_gap=" << num(row.product_gap)
            << " corrected_product_gap=" << num(row.corrected_product_gap) << " comm_gap=" << num(row.comm_gap)
            << '\n';
      }
    }
    return out.str();
  }
};

}  // namespace multiflow
