#pragma once

#include <cmath>
#include <span>
#include <sstream>
#include <string_view>
#include <vector>

#include "multiflow/errors.hpp"
#include "multiflow/viscosity.hpp"

namespace multiflow {

enum class Boundary { Periodic, NoSlip };

inline std::string_view to_string(Boundary b) { return b == Boundary::Periodic ? "periodic" : "noslip"; }

/// Ghost-cell parity at NoSlip walls: velocities are odd (zero at the face),
/// densities and pressures even (zero normal gradient).
enum class Ghost { Odd, Even };

using Field = std::vector<double>;

/// Cell-centred uniform grid on (0, L).
struct Grid1D {
  double length = 1.0;
  int n_cells = 64;
  Boundary bc = Boundary::Periodic;

  Grid1D() = default;
  Grid1D(double length_, int n_cells_, Boundary bc_) : length(length_), n_cells(n_cells_), bc(bc_) {
    if (!(length > 0.0) || !std::isfinite(length)) throw ConfigError("grid length must be positive");
    if (n_cells < 1) throw ConfigError("grid needs at least one cell");
  }

  double dx() const noexcept { return length / n_cells; }
  double x(int c) const noexcept { return (c + 0.5) * dx(); }
  bool periodic() const noexcept { return bc == Boundary::Periodic; }

  bool operator==(const Grid1D&) const = default;
};

namespace detail {

inline void require_size(std::span<const double> f, const Grid1D& grid, const char* what) {
  if (static_cast<int>(f.size()) != grid.n_cells) {
    std::ostringstream msg;
    msg << what << ": field has " << f.size() << " values, grid has " << grid.n_cells << " cells";
    throw ConfigError(msg.str());
  }
}

/// f at cell c, with c in [-1, n] resolved through the boundary condition.
inline double ghosted(std::span<const double> f, const Grid1D& grid, int c, Ghost parity) {
  const int n = grid.n_cells;
  if (c >= 0 && c < n) return f[c];
  if (grid.periodic()) return f[(c + n) % n];
  const double mirror = c < 0 ? f[0] : f[n - 1];
  return parity == Ghost::Odd ? -mirror : mirror;
}

}  // namespace detail

/// Second-order central difference with boundary-consistent closure.
inline Field ddx_central(std::span<const double> f, const Grid1D& grid, Ghost parity = Ghost::Odd) {
  detail::require_size(f, grid, "ddx_central");
  if (grid.n_cells < 3) throw ConfigError("ddx_central: grid needs at least 3 cells");
  const int n = grid.n_cells;
  const double inv2dx = 1.0 / (2.0 * grid.dx());
  Field d(n);
  for (int c = 0; c < n; ++c) {
    d[c] = (detail::ghosted(f, grid, c + 1, parity) - detail::ghosted(f, grid, c - 1, parity)) * inv2dx;
  }
  return d;
}

/// Face velocities w_{c+1/2}, c = -1..n-1 (n+1 faces, face k sits left of cell k).
/// NoSlip walls carry zero velocity.
inline Field face_velocity(std::span<const double> w, const Grid1D& grid) {
  detail::require_size(w, grid, "face_velocity");
  const int n = grid.n_cells;
  Field wf(n + 1);
  for (int k = 1; k < n; ++k) wf[k] = 0.5 * (w[k - 1] + w[k]);
  if (grid.periodic()) {
    wf[0] = 0.5 * (w[n - 1] + w[0]);
    wf[n] = wf[0];
  } else {
    wf[0] = 0.0;
    wf[n] = 0.0;
  }
  return wf;
}

/// Upwind mass flux rho_upwind * w at every face.
inline Field upwind_face_flux(std::span<const double> rho, std::span<const double> wf, const Grid1D& grid) {
  detail::require_size(rho, grid, "upwind_face_flux");
  const int n = grid.n_cells;
  Field flux(n + 1);
  for (int k = 0; k <= n; ++k) {
    const double left = detail::ghosted(rho, grid, k - 1, Ghost::Even);
    const double right = detail::ghosted(rho, grid, k, Ghost::Even);
    flux[k] = wf[k] >= 0.0 ? wf[k] * left : wf[k] * right;
  }
  if (grid.periodic()) flux[n] = flux[0];
  return flux;
}

/// Conservative first-order upwind div(rho w).
inline Field upwind_flux_div(std::span<const double> rho, std::span<const double> w, const Grid1D& grid) {
  detail::require_size(rho, grid, "upwind_flux_div");
  const Field wf = face_velocity(w, grid);
  const Field flux = upwind_face_flux(rho, wf, grid);
  const int n = grid.n_cells;
  const double inv_dx = 1.0 / grid.dx();
  Field div(n);
  for (int c = 0; c < n; ++c) div[c] = (flux[c + 1] - flux[c]) * inv_dx;
  return div;
}

/// (div S)_i = sum_k nu_ik d2u_k/dx2 in flux form (three-point stencil).
inline std::vector<Field> laplacian_like_apply(const ViscosityMatrices& visc, const std::vector<Field>& u,
                                               const Grid1D& grid) {
  const int nc = visc.size();
  if (static_cast<int>(u.size()) != nc) {
    throw ConfigError("laplacian_like_apply: constituent count does not match viscosity matrices");
  }
  const int n = grid.n_cells;
  const double inv_dx2 = 1.0 / (grid.dx() * grid.dx());
  std::vector<Field> lap(nc, Field(n, 0.0));
  for (int k = 0; k < nc; ++k) {
    detail::require_size(u[k], grid, "laplacian_like_apply");
    Field second(n);
    for (int c = 0; c < n; ++c) {
      const double left = detail::ghosted(u[k], grid, c - 1, Ghost::Odd);
      const double right = detail::ghosted(u[k], grid, c + 1, Ghost::Odd);
      second[c] = ((right - u[k][c]) - (u[k][c] - left)) * inv_dx2;
    }
    for (int i = 0; i < nc; ++i) {
      const double coeff = visc.nu()(i, k);
      if (coeff == 0.0) continue;
      for (int c = 0; c < n; ++c) lap[i][c] += coeff * second[c];
    }
  }
  return lap;
}

/// Gradients (u_c - u_{c-1})/dx at the n+1 faces, wall ghosts odd.
inline Field face_gradient(std::span<const double> u, const Grid1D& grid) {
  detail::require_size(u, grid, "face_gradient");
  const int n = grid.n_cells;
  const double inv_dx = 1.0 / grid.dx();
  Field g(n + 1);
  for (int k = 0; k <= n; ++k) {
    g[k] = (detail::ghosted(u, grid, k, Ghost::Odd) - detail::ghosted(u, grid, k - 1, Ghost::Odd)) * inv_dx;
  }
  return g;
}

/// Midpoint rule: sum(f) * dx.
inline double integrate(std::span<const double> f, const Grid1D& grid) {
  detail::require_size(f, grid, "integrate");
  double s = 0.0;
  for (double v : f) s += v;
  return s * grid.dx();
}

}  // namespace multiflow
