#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <span>
#include <sstream>
#include <vector>

#include "multiflow/errors.hpp"

namespace multiflow {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/**
 * Shear (mu) and second (lambda) viscosity matrices of an N-constituent
 * mixture. The total matrix nu = lambda + 2 mu and H = lambda + (2/3) mu are
 * derived on construction and never supplied by the caller.
 */
class ViscosityMatrices {
 public:
  ViscosityMatrices(Matrix mu, Matrix lam) : mu_(std::move(mu)), lam_(std::move(lam)) {
    if (mu_.rows() == 0 || mu_.rows() != mu_.cols() || lam_.rows() != lam_.cols() ||
        lam_.rows() != mu_.rows()) {
      std::ostringstream msg;
      msg << "viscosity matrices must be square of equal size N >= 1 (mu is " << mu_.rows() << "x"
          << mu_.cols() << ", lambda is " << lam_.rows() << "x" << lam_.cols() << ")";
      throw ConfigError(msg.str());
    }
    if (!mu_.allFinite() || !lam_.allFinite()) {
      throw InvalidInputError("viscosity matrices contain NaN or Inf entries");
    }
    nu_ = lam_ + 2.0 * mu_;
    h_ = lam_ + (2.0 / 3.0) * mu_;
  }

  /// Diagonal matrices: mu = diag(mu_diag), lambda = diag(lam_diag).
  static ViscosityMatrices diagonal(const Vector& mu_diag, const Vector& lam_diag) {
    return {Matrix(mu_diag.asDiagonal()), Matrix(lam_diag.asDiagonal())};
  }

  int size() const noexcept { return static_cast<int>(mu_.rows()); }
  const Matrix& mu() const noexcept { return mu_; }
  const Matrix& lam() const noexcept { return lam_; }
  const Matrix& nu() const noexcept { return nu_; }
  const Matrix& h() const noexcept { return h_; }

 private:
  Matrix mu_;
  Matrix lam_;
  Matrix nu_;
  Matrix h_;
};

struct AdmissibilityReport {
  bool admissible = false;
  double min_eig_mu = 0.0;  ///< smallest eigenvalue of sym(mu)
  double min_eig_h = 0.0;   ///< smallest eigenvalue of sym(H)
  double min_eig_nu = 0.0;  ///< smallest eigenvalue of sym(nu)
  double psd_tolerance = 0.0;
  bool symmetric = true;  ///< mu and lambda both symmetric
  Matrix nu;
};

namespace detail {

inline Matrix symmetric_part(const Matrix& m) { return 0.5 * (m + m.transpose()); }

inline Vector symmetric_eigenvalues(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> solver(symmetric_part(m), Eigen::EigenvaluesOnly);
  return solver.eigenvalues();
}

}  // namespace detail

/// Relative slack used when testing sym(H) >= 0.
inline constexpr double kPsdRelativeTolerance = 1e-10;

/**
 * Classifies the matrices as admissible when sym(mu) is positive definite and
 * sym(H) is positive semidefinite. The semidefinite test allows eigenvalues
 * down to -1e-10 * max|eig(sym H)|.
 */
inline AdmissibilityReport validate_viscosity(const ViscosityMatrices& visc) {
  AdmissibilityReport report;
  const Vector eig_mu = detail::symmetric_eigenvalues(visc.mu());
  const Vector eig_h = detail::symmetric_eigenvalues(visc.h());
  const Vector eig_nu = detail::symmetric_eigenvalues(visc.nu());
  report.min_eig_mu = eig_mu.minCoeff();
  report.min_eig_h = eig_h.minCoeff();
  report.min_eig_nu = eig_nu.minCoeff();
  report.psd_tolerance = kPsdRelativeTolerance * eig_h.cwiseAbs().maxCoeff();
  report.admissible = report.min_eig_mu > 0.0 && report.min_eig_h >= -report.psd_tolerance;
  report.symmetric = visc.mu() == visc.mu().transpose() && visc.lam() == visc.lam().transpose();
  report.nu = visc.nu();
  return report;
}

inline AdmissibilityReport validate_viscosity(const Matrix& mu, const Matrix& lam) {
  return validate_viscosity(ViscosityMatrices(mu, lam));
}

/// One-dimensional stress S_i = sum_k nu_ik du_k/dx.
inline std::vector<double> viscous_flux_1d(std::span<const double> dudx,
                                           const ViscosityMatrices& visc) {
  const int n = visc.size();
  if (static_cast<int>(dudx.size()) != n) {
    throw ConfigError("viscous_flux_1d: gradient count does not match matrix size");
  }
  std::vector<double> stress(n, 0.0);
  for (int i = 0; i < n; ++i) {
    double s = 0.0;
    for (int k = 0; k < n; ++k) s += visc.nu()(i, k) * dudx[k];
    stress[i] = s;
  }
  return stress;
}

/// Quadratic form sum_ij nu_ij g_j g_i; nonnegative for admissible matrices.
inline double dissipation_density(std::span<const double> dudx, const ViscosityMatrices& visc) {
  const int n = visc.size();
  if (static_cast<int>(dudx.size()) != n) {
    throw ConfigError("dissipation_density: gradient count does not match matrix size");
  }
  double q = 0.0;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) q += visc.nu()(i, j) * dudx[j] * dudx[i];
  }
  return q;
}

}  // namespace multiflow
