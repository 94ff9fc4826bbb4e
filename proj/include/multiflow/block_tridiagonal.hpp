#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <sstream>
#include <vector>

#include "multiflow/errors.hpp"

namespace multiflow {

/**
 * Block tridiagonal system with m x m blocks:
 *
 *   lower[c] x[c-1] + diag[c] x[c] + upper[c] x[c+1] = rhs[c]
 *
 * When `cyclic` is set, lower[0] couples to x[n-1] and upper[n-1] to x[0].
 * Otherwise lower[0] and upper[n-1] are ignored.
 */
struct BlockTridiagonal {
  std::vector<Eigen::MatrixXd> lower;
  std::vector<Eigen::MatrixXd> diag;
  std::vector<Eigen::MatrixXd> upper;
  bool cyclic = false;

  BlockTridiagonal() = default;
  BlockTridiagonal(int n_blocks, int block_size, bool cyclic_)
      : lower(n_blocks, Eigen::MatrixXd::Zero(block_size, block_size)),
        diag(n_blocks, Eigen::MatrixXd::Zero(block_size, block_size)),
        upper(n_blocks, Eigen::MatrixXd::Zero(block_size, block_size)),
        cyclic(cyclic_) {}

  int n_blocks() const noexcept { return static_cast<int>(diag.size()); }
  int block_size() const noexcept { return diag.empty() ? 0 : static_cast<int>(diag.front().rows()); }

  /// y = A x, x and y stacked block-wise (length n*m).
  Eigen::MatrixXd apply(const Eigen::MatrixXd& x) const {
    const int n = n_blocks();
    const int m = block_size();
    Eigen::MatrixXd y = Eigen::MatrixXd::Zero(x.rows(), x.cols());
    for (int c = 0; c < n; ++c) {
      y.middleRows(c * m, m) += diag[c] * x.middleRows(c * m, m);
      if (cyclic && n == 1) y.topRows(m) += (lower[0] + upper[0]) * x.topRows(m);
      if (c > 0) {
        y.middleRows(c * m, m) += lower[c] * x.middleRows((c - 1) * m, m);
      } else if (cyclic && n > 1) {
        y.middleRows(0, m) += lower[0] * x.middleRows((n - 1) * m, m);
      }
      if (c + 1 < n) {
        y.middleRows(c * m, m) += upper[c] * x.middleRows((c + 1) * m, m);
      } else if (cyclic && n > 1) {
        y.middleRows(c * m, m) += upper[c] * x.middleRows(0, m);
      }
    }
    return y;
  }
};

namespace detail {

/// Block Thomas elimination on blocks [first, first+count) of a non-cyclic
/// system, several right-hand sides at once.
inline Eigen::MatrixXd block_thomas(const BlockTridiagonal& sys, int first, int count, Eigen::MatrixXd rhs) {
  const int m = sys.block_size();
  std::vector<Eigen::PartialPivLU<Eigen::MatrixXd>> pivots;
  pivots.reserve(count);
  std::vector<Eigen::MatrixXd> upper_mod(count);
  for (int k = 0; k < count; ++k) {
    const int c = first + k;
    Eigen::MatrixXd d = sys.diag[c];
    if (k > 0) {
      d -= sys.lower[c] * upper_mod[k - 1];
      rhs.middleRows(k * m, m) -= sys.lower[c] * rhs.middleRows((k - 1) * m, m);
    }
    pivots.emplace_back(d);
    if (k + 1 < count) upper_mod[k] = pivots.back().solve(sys.upper[c]);
    rhs.middleRows(k * m, m) = pivots.back().solve(rhs.middleRows(k * m, m));
  }
  for (int k = count - 2; k >= 0; --k) {
    rhs.middleRows(k * m, m) -= upper_mod[k] * rhs.middleRows((k + 1) * m, m);
  }
  return rhs;
}

inline Eigen::MatrixXd direct_solve(const BlockTridiagonal& sys, const Eigen::MatrixXd& rhs) {
  const int n = sys.n_blocks();
  const int m = sys.block_size();
  if (!sys.cyclic || n < 3) {
    if (!sys.cyclic) return block_thomas(sys, 0, n, rhs);
    // Tiny cyclic systems: fold the wrap-around blocks into the band.
    BlockTridiagonal folded = sys;
    folded.cyclic = false;
    if (n == 1) {
      folded.diag[0] += sys.lower[0] + sys.upper[0];
    } else {
      folded.upper[0] += sys.lower[0];
      folded.lower[1] += sys.upper[1];
    }
    return block_thomas(folded, 0, n, rhs);
  }
  // Eliminate the last block: x[0..n-2] = y - W x[n-1], where the band
  // solve sees lower[0] at block 0 and upper[n-2] at block n-2 as coupling.
  const int inner = n - 1;
  const int cols = static_cast<int>(rhs.cols());
  Eigen::MatrixXd stacked(inner * m, cols + m);
  stacked.leftCols(cols) = rhs.topRows(inner * m);
  stacked.rightCols(m).setZero();
  stacked.block(0, cols, m, m) = sys.lower[0];
  stacked.block((inner - 1) * m, cols, m, m) += sys.upper[inner - 1];
  const Eigen::MatrixXd solved = block_thomas(sys, 0, inner, stacked);
  const Eigen::MatrixXd y = solved.leftCols(cols);
  const Eigen::MatrixXd w = solved.rightCols(m);

  const int last = n - 1;
  const Eigen::MatrixXd schur = sys.diag[last] - sys.lower[last] * w.middleRows((inner - 1) * m, m) -
                                sys.upper[last] * w.topRows(m);
  const Eigen::MatrixXd reduced_rhs = rhs.middleRows(last * m, m) -
                                      sys.lower[last] * y.middleRows((inner - 1) * m, m) -
                                      sys.upper[last] * y.topRows(m);
  const Eigen::MatrixXd x_last = schur.partialPivLu().solve(reduced_rhs);

  Eigen::MatrixXd x(n * m, cols);
  x.topRows(inner * m) = y - w * x_last;
  x.bottomRows(m) = x_last;
  return x;
}

}  // namespace detail

struct BlockSolveResult {
  Eigen::VectorXd x;
  double relative_residual = 0.0;
  int refinements = 0;
};

/**
 * Direct block LU solve followed by iterative refinement until
 * ||A x - b|| <= tol * ||b|| (or the residual stops improving). Throws
 * SolveError with the achieved residual if the tolerance is missed.
 */
inline BlockSolveResult solve_block_tridiagonal(const BlockTridiagonal& sys, const Eigen::VectorXd& rhs,
                                                double tol, int max_refinements = 4) {
  const int n = sys.n_blocks();
  const int m = sys.block_size();
  if (n == 0 || m == 0) throw ConfigError("block tridiagonal system is empty");
  if (rhs.size() != static_cast<Eigen::Index>(n) * m) {
    throw ConfigError("block tridiagonal right-hand side has the wrong length");
  }
  BlockSolveResult out;
  const double rhs_norm = rhs.norm();
  out.x = detail::direct_solve(sys, rhs);
  if (rhs_norm == 0.0) {
    out.relative_residual = out.x.norm() == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
    return out;
  }
  Eigen::VectorXd r = rhs - sys.apply(out.x);
  out.relative_residual = r.norm() / rhs_norm;
  while (out.relative_residual > tol && out.refinements < max_refinements) {
    const Eigen::VectorXd candidate = out.x + detail::direct_solve(sys, r);
    const Eigen::VectorXd r_new = rhs - sys.apply(candidate);
    const double res_new = r_new.norm() / rhs_norm;
    ++out.refinements;
    if (!(res_new < out.relative_residual)) break;
    out.x = candidate;
    r = r_new;
    out.relative_residual = res_new;
  }
  if (!(out.relative_residual <= tol)) {
    std::ostringstream msg;
    msg << "block tridiagonal solve missed tolerance " << tol << " (relative residual "
        << out.relative_residual << ")";
    throw SolveError(msg.str(), out.relative_residual);
  }
  return out;
}

}  // namespace multiflow
