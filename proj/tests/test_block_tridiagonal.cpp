#include <gtest/gtest.h>

#include <random>

#include "multiflow/block_tridiagonal.hpp"

using namespace multiflow;

namespace {

BlockTridiagonal random_system(std::mt19937_64& rng, int n, int m, bool cyclic) {
  std::normal_distribution<double> d;
  BlockTridiagonal sys(n, m, cyclic);
  for (int c = 0; c < n; ++c) {
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j) {
        sys.lower[c](i, j) = d(rng);
        sys.upper[c](i, j) = d(rng);
        sys.diag[c](i, j) = d(rng);
      }
    sys.diag[c] += 6.0 * m * Eigen::MatrixXd::Identity(m, m);
  }
  return sys;
}

/// Assembled dense matrix, the oracle route.
Eigen::MatrixXd dense(const BlockTridiagonal& sys) {
  const int n = sys.n_blocks(), m = sys.block_size();
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n * m, n * m);
  for (int c = 0; c < n; ++c) {
    a.block(c * m, c * m, m, m) += sys.diag[c];
    if (c > 0) a.block(c * m, (c - 1) * m, m, m) += sys.lower[c];
    else if (sys.cyclic) a.block(0, (n - 1) * m, m, m) += sys.lower[0];
    if (c + 1 < n) a.block(c * m, (c + 1) * m, m, m) += sys.upper[c];
    else if (sys.cyclic) a.block(c * m, 0, m, m) += sys.upper[c];
  }
  return a;
}

}  // namespace

class BlockSolve : public ::testing::TestWithParam<std::tuple<int, int, bool>> {};

TEST_P(BlockSolve, MatchesDenseLu) {
  const auto [n, m, cyclic] = GetParam();
  std::mt19937_64 rng(n * 31 + m * 7 + cyclic);
  const auto sys = random_system(rng, n, m, cyclic);
  Eigen::VectorXd b = Eigen::VectorXd::Random(n * m);
  const auto res = solve_block_tridiagonal(sys, b, 1e-12);
  const Eigen::VectorXd oracle = dense(sys).fullPivLu().solve(b);
  EXPECT_LE((res.x - oracle).norm(), 1e-11 * oracle.norm());
  EXPECT_LE(res.relative_residual, 1e-12);
  EXPECT_LE((dense(sys) * res.x - b).norm(), 1e-12 * b.norm());
}

INSTANTIATE_TEST_SUITE_P(Shapes, BlockSolve,
                         ::testing::Combine(::testing::Values(1, 2, 3, 17, 64), ::testing::Values(1, 2, 4),
                                            ::testing::Bool()),
                         [](const auto& info) {
                           return "n" + std::to_string(std::get<0>(info.param)) + "_m" +
                                  std::to_string(std::get<1>(info.param)) +
                                  (std::get<2>(info.param) ? "_cyclic" : "_open");
                         });

TEST(BlockTridiagonalSystem, ApplyMatchesDenseProduct) {
  std::mt19937_64 rng(3);
  for (bool cyclic : {false, true}) {
    const auto sys = random_system(rng, 9, 3, cyclic);
    const Eigen::MatrixXd x = Eigen::MatrixXd::Random(27, 2);
    EXPECT_LE((sys.apply(x) - dense(sys) * x).norm(), 1e-13 * x.norm());
  }
}

TEST(BlockTridiagonalSystem, ZeroRightHandSide) {
  std::mt19937_64 rng(4);
  const auto sys = random_system(rng, 5, 2, true);
  const auto res = solve_block_tridiagonal(sys, Eigen::VectorXd::Zero(10), 1e-12);
  EXPECT_EQ(res.x.norm(), 0.0);
}

TEST(BlockTridiagonalSystem, BadShapesAndSingularSystems) {
  std::mt19937_64 rng(5);
  const auto sys = random_system(rng, 4, 2, false);
  EXPECT_THROW(solve_block_tridiagonal(sys, Eigen::VectorXd::Ones(7), 1e-12), ConfigError);
  EXPECT_THROW(solve_block_tridiagonal(BlockTridiagonal{}, Eigen::VectorXd(), 1e-12), ConfigError);
  BlockTridiagonal singular(3, 1, false);  // all zero
  EXPECT_THROW(solve_block_tridiagonal(singular, Eigen::VectorXd::Ones(3), 1e-12), SolveError);
}
