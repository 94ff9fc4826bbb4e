#pragma once

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <sstream>
#include <utility>
#include <variant>
#include <vector>

#include "multiflow/errors.hpp"

namespace multiflow {

/// p = K rho^gamma.
struct Polytropic {
  double K = 1.0;
  double gamma = 2.0;
  bool operator==(const Polytropic&) const = default;
};

/// Monotone piecewise-linear law through (rho, p) breakpoints.
struct TabulatedMonotone {
  std::vector<double> rho;
  std::vector<double> p;
  bool operator==(const TabulatedMonotone&) const = default;
};

/// Counts clamp events of tabulated laws. Owned by the caller.
struct PressureWarnings {
  long clamped_below = 0;
};

/// Exponent above which the compactness theory for polytropic laws applies.
inline constexpr double kExistenceGammaThreshold = 1.5;

class PressureLaw {
 public:
  using Kind = std::variant<Polytropic, TabulatedMonotone>;

  static PressureLaw polytropic(double K, double gamma) {
    if (!std::isfinite(K) || !std::isfinite(gamma)) {
      throw InvalidInputError("polytropic law: K and gamma must be finite");
    }
    if (!(K > 0.0)) throw ConfigError("polytropic law: K must be positive");
    if (!(gamma > 1.0)) throw ConfigError("polytropic law: gamma must exceed 1");
    return PressureLaw(Polytropic{K, gamma});
  }

  static PressureLaw tabulated(std::vector<double> rho, std::vector<double> p) {
    if (rho.size() != p.size() || rho.size() < 2) {
      throw ConfigError("tabulated law: need at least two (rho, p) breakpoints");
    }
    for (std::size_t k = 0; k < rho.size(); ++k) {
      if (!std::isfinite(rho[k]) || !std::isfinite(p[k])) {
        throw InvalidInputError("tabulated law: breakpoints must be finite");
      }
    }
    if (rho.front() < 0.0) throw ConfigError("tabulated law: densities must be nonnegative");
    for (std::size_t k = 1; k < rho.size(); ++k) {
      if (!(rho[k] > rho[k - 1])) {
        throw ConfigError("tabulated law: density breakpoints must be strictly increasing");
      }
      if (p[k] < p[k - 1]) throw ConfigError("tabulated law: pressure must be nondecreasing");
    }
    return PressureLaw(TabulatedMonotone{std::move(rho), std::move(p)});
  }

  const Kind& kind() const noexcept { return kind_; }
  bool is_polytropic() const noexcept { return std::holds_alternative<Polytropic>(kind_); }

  /// True unless the law is polytropic with gamma <= 3/2.
  bool above_existence_threshold() const noexcept {
    if (const auto* poly = std::get_if<Polytropic>(&kind_)) {
      return poly->gamma > kExistenceGammaThreshold;
    }
    return true;
  }

  bool operator==(const PressureLaw&) const = default;

 private:
  explicit PressureLaw(Kind kind) : kind_(std::move(kind)) {}
  Kind kind_;
};

namespace detail {

inline void require_nonnegative(double rho, const char* what) {
  if (!(rho >= 0.0)) {
    std::ostringstream msg;
    msg << what << ": density must be nonnegative (got " << rho << ")";
    throw DomainError(msg.str());
  }
}

/// Segment index k with rho[k] <= r <= rho[k+1]; r must lie inside the table.
inline std::size_t table_segment(const TabulatedMonotone& t, double r) {
  auto it = std::upper_bound(t.rho.begin(), t.rho.end(), r);
  std::size_t k = static_cast<std::size_t>(it - t.rho.begin());
  if (k == 0) return 0;
  return std::min(k - 1, t.rho.size() - 2);
}

inline void require_below_table_top(const TabulatedMonotone& t, double r, const char* what) {
  if (r > t.rho.back()) {
    std::ostringstream msg;
    msg << what << ": density " << r << " above the last tabulated breakpoint " << t.rho.back();
    throw DomainError(msg.str());
  }
}

inline double table_interp(const TabulatedMonotone& t, double r) {
  const std::size_t k = table_segment(t, r);
  const double s = (r - t.rho[k]) / (t.rho[k + 1] - t.rho[k]);
  return t.p[k] + s * (t.p[k + 1] - t.p[k]);
}

}  // namespace detail

/// Pressure p(rho). Tabulated laws clamp to the first breakpoint below the table.
inline double pressure_eval(const PressureLaw& law, double rho, PressureWarnings* warnings = nullptr) {
  detail::require_nonnegative(rho, "pressure_eval");
  if (const auto* poly = std::get_if<Polytropic>(&law.kind())) {
    return poly->K * std::pow(rho, poly->gamma);
  }
  const auto& table = std::get<TabulatedMonotone>(law.kind());
  if (rho < table.rho.front()) {
    if (warnings) ++warnings->clamped_below;
    return table.p.front();
  }
  detail::require_below_table_top(table, rho, "pressure_eval");
  return detail::table_interp(table, rho);
}

/// dp/drho; zero in the clamped region of a table.
inline double pressure_derivative(const PressureLaw& law, double rho) {
  detail::require_nonnegative(rho, "pressure_derivative");
  if (const auto* poly = std::get_if<Polytropic>(&law.kind())) {
    return poly->K * poly->gamma * std::pow(rho, poly->gamma - 1.0);
  }
  const auto& table = std::get<TabulatedMonotone>(law.kind());
  if (rho < table.rho.front()) return 0.0;
  detail::require_below_table_top(table, rho, "pressure_derivative");
  const std::size_t k = detail::table_segment(table, rho);
  return (table.p[k + 1] - table.p[k]) / (table.rho[k + 1] - table.rho[k]);
}

/**
 * Potential energy density P with rho P' - P = p.
 *
 * Polytropic: P = K rho^gamma / (gamma - 1).
 * Tabulated: P = rho * (int_{rho_0}^{rho} p(s)/s^2 ds + p(rho_0)/rho_0), where
 * rho_0 is the first breakpoint; the integral is evaluated by adaptive
 * Gauss-Kronrod quadrature on each table segment. Below rho_0 the clamped law
 * gives P = p(rho_0).
 */
inline double pressure_potential(const PressureLaw& law, double rho) {
  if (!(rho > 0.0)) {
    std::ostringstream msg;
    msg << "pressure_potential: density must be positive (got " << rho << ")";
    throw DomainError(msg.str());
  }
  if (const auto* poly = std::get_if<Polytropic>(&law.kind())) {
    return poly->K * std::pow(rho, poly->gamma) / (poly->gamma - 1.0);
  }
  const auto& table = std::get<TabulatedMonotone>(law.kind());
  const double rho0 = table.rho.front();
  const double p0 = table.p.front();
  if (rho <= rho0) return p0;
  detail::require_below_table_top(table, rho, "pressure_potential");
  if (rho0 == 0.0) {
    throw DomainError("pressure_potential: tables starting at rho = 0 have no finite potential gauge");
  }

  using Quadrature = boost::math::quadrature::gauss_kronrod<double, 15>;
  double integral = 0.0;
  for (std::size_t k = 0; k + 1 < table.rho.size() && table.rho[k] < rho; ++k) {
    const double a = table.rho[k];
    const double b = std::min(table.rho[k + 1], rho);
    const double slope = (table.p[k + 1] - table.p[k]) / (table.rho[k + 1] - table.rho[k]);
    const double pa = table.p[k];
    auto integrand = [&](double s) { return (pa + slope * (s - a)) / (s * s); };
    integral += Quadrature::integrate(integrand, a, b, 12, 1e-14);
  }
  return rho * (integral + p0 / rho0);
}

}  // namespace multiflow
