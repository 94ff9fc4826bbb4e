#pragma once

#include <cmath>
#include <functional>
#include <optional>
#include <span>
#include <sstream>
#include <string_view>
#include <vector>

#include "multiflow/errors.hpp"
#include "multiflow/pressure.hpp"
#include "multiflow/viscosity.hpp"

namespace multiflow {

/// Original: w_i = u_i, own pressures p_i(rho_i), exchange J_i.
/// Modified: w_i = v = mean(u), common pressure p(sum rho_i), no exchange.
enum class ModelVariant { Original, Modified };

inline std::string_view to_string(ModelVariant v) {
  return v == ModelVariant::Original ? "original" : "modified";
}

/// Momentum exchange intensities a_ij >= 0. The diagonal is inert and ignored.
class ExchangeMatrix {
 public:
  explicit ExchangeMatrix(Matrix a) : a_(std::move(a)) {
    if (a_.rows() != a_.cols() || a_.rows() == 0) {
      throw ConfigError("exchange matrix must be square and nonempty");
    }
    if (!a_.allFinite()) throw InvalidInputError("exchange matrix contains NaN or Inf entries");
    for (Eigen::Index i = 0; i < a_.rows(); ++i) {
      for (Eigen::Index j = 0; j < a_.cols(); ++j) {
        if (i != j && a_(i, j) < 0.0) {
          std::ostringstream msg;
          msg << "exchange matrix entry a(" << i + 1 << "," << j + 1 << ") = " << a_(i, j)
              << " is negative";
          throw ConfigError(msg.str());
        }
      }
    }
  }

  int size() const noexcept { return static_cast<int>(a_.rows()); }
  const Matrix& a() const noexcept { return a_; }
  double operator()(int i, int j) const { return a_(i, j); }

  bool is_zero() const {
    for (Eigen::Index i = 0; i < a_.rows(); ++i)
      for (Eigen::Index j = 0; j < a_.cols(); ++j)
        if (i != j && a_(i, j) != 0.0) return false;
    return true;
  }

  bool is_symmetric() const {
    for (Eigen::Index i = 0; i < a_.rows(); ++i)
      for (Eigen::Index j = 0; j < i; ++j)
        if (a_(i, j) != a_(j, i)) return false;
    return true;
  }

  /// Generator L with (L u)_i = sum_{j != i} a_ij (u_j - u_i).
  Matrix generator() const {
    Matrix g = Matrix::Zero(a_.rows(), a_.cols());
    for (Eigen::Index i = 0; i < a_.rows(); ++i) {
      for (Eigen::Index j = 0; j < a_.cols(); ++j) {
        if (i == j) continue;
        g(i, j) = a_(i, j);
        g(i, i) -= a_(i, j);
      }
    }
    return g;
  }

 private:
  Matrix a_;
};

/// Per-constituent body force f_i(x, t), acceleration units.
using BodyForce = std::function<double(int constituent, double x, double t)>;

inline BodyForce zero_force() {
  return [](int, double, double) { return 0.0; };
}

struct MixtureParams {
  int n_constituents = 1;
  ModelVariant variant = ModelVariant::Modified;
  ViscosityMatrices visc{Matrix::Identity(1, 1), Matrix::Zero(1, 1)};
  /// One law (Modified) or one per constituent (Original).
  std::vector<PressureLaw> pressure;
  std::optional<ExchangeMatrix> exchange;
  BodyForce body_force = zero_force();

  /// Law governing constituent i (the common law for the Modified model).
  const PressureLaw& law(int i) const {
    return variant == ModelVariant::Modified ? pressure.front() : pressure.at(i);
  }

  bool has_exchange() const { return exchange.has_value() && !exchange->is_zero(); }

  /// Throws ConfigError when sizes or the variant/pressure/exchange combination are inconsistent.
  void validate() const {
    if (n_constituents < 1) throw ConfigError("number of constituents must be positive");
    if (visc.size() != n_constituents) {
      throw ConfigError("viscosity matrix size does not match the number of constituents");
    }
    if (variant == ModelVariant::Modified) {
      if (pressure.size() != 1) {
        throw ConfigError("modified model requires exactly one common pressure law");
      }
      if (exchange && !exchange->is_zero()) {
        throw ConfigError("modified model drops momentum exchange; exchange matrix must be zero");
      }
    } else if (static_cast<int>(pressure.size()) != n_constituents) {
      throw ConfigError("original model requires one pressure law per constituent");
    }
    if (exchange && exchange->size() != n_constituents) {
      throw ConfigError("exchange matrix size does not match the number of constituents");
    }
    if (!body_force) throw ConfigError("body force callback is empty");
  }
};

/// v = (1/N) sum u_i.
inline double average_velocity(std::span<const double> u) {
  if (u.empty()) throw ConfigError("average_velocity: need at least one velocity");
  double s = 0.0;
  for (double x : u) s += x;
  return s / static_cast<double>(u.size());
}

/// rho = sum rho_i, Neumaier-compensated.
inline double total_density(std::span<const double> rho) {
  double sum = 0.0;
  double comp = 0.0;
  for (double x : rho) {
    const double t = sum + x;
    if (std::abs(sum) >= std::abs(x)) {
      comp += (sum - t) + x;
    } else {
      comp += (x - t) + sum;
    }
    sum = t;
  }
  return sum + comp;
}

/// alpha_i = rho_i / rho.
inline std::vector<double> concentrations(std::span<const double> rho) {
  const double total = total_density(rho);
  if (!(total > 0.0)) throw DegenerateStateError("concentrations: total density is zero");
  std::vector<double> alpha(rho.size());
  for (std::size_t i = 0; i < rho.size(); ++i) alpha[i] = rho[i] / total;
  return alpha;
}

/// J_i = sum_j a_ij (u_j - u_i).
inline std::vector<double> momentum_exchange(std::span<const double> u, const ExchangeMatrix& a) {
  const int n = a.size();
  if (static_cast<int>(u.size()) != n) {
    throw ConfigError("momentum_exchange: velocity count does not match exchange matrix");
  }
  std::vector<double> j(n, 0.0);
  for (int i = 0; i < n; ++i) {
    for (int k = 0; k < n; ++k) {
      if (k != i) j[i] += a(i, k) * (u[k] - u[i]);
    }
  }
  return j;
}

}  // namespace multiflow
