#include <gtest/gtest.h>

#include <numbers>
#include <random>

#include "multiflow/evf.hpp"
#include "test_support.hpp"

using namespace multiflow;
using testing_support::band_limited;

namespace {

double max_diff(const SymTensorField2D& a, const SymTensorField2D& b) {
  return std::max({(a.xx - b.xx).max_abs(), (a.xy - b.xy).max_abs(), (a.yy - b.yy).max_abs()});
}

double max_abs(const SymTensorField2D& a) { return std::max({a.xx.max_abs(), a.xy.max_abs(), a.yy.max_abs()}); }

}  // namespace

TEST(Evf, TraceOfRieszIsProjection) {
  std::mt19937_64 rng(1);
  SpectralOps ops(64);
  for (int trial = 0; trial < 5; ++trial) {
    const auto f = band_limited(rng, 64, 8, 3.0);
    const auto r = riesz_second(ops, f);
    EXPECT_LE((r.trace() - (f - PeriodicField2D(64, f.mean()))).max_abs(), 1e-10 * l2_norm(f));
  }
}

TEST(Evf, SelfAdjointness) {
  SpectralOps ops(32);
  const auto s = PeriodicField2D::sample(32, [](double x, double) { return std::sin(x); });
  const auto c = PeriodicField2D::sample(32, [](double x, double) { return std::cos(x); });
  EXPECT_LE(check_selfadjoint(ops, s, c).max(), 1e-12);
  EXPECT_EQ(check_selfadjoint(ops, s, s).max(), 0.0);
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    const auto gap = check_selfadjoint(ops, band_limited(rng, 32), band_limited(rng, 32, 6, 1.0));
    EXPECT_LE(gap.relative(), 1e-10);
  }
}

TEST(Evf, CommAlgebra) {
  std::mt19937_64 rng(3);
  const int n = 64;
  SpectralOps ops(n);
  const auto a1 = band_limited(rng, n), a2 = band_limited(rng, n), b = band_limited(rng, n, 6, 2.0);
  const double scale = l2_norm(a1) * l2_norm(b) + l2_norm(a2) * l2_norm(b);
  EXPECT_LE(max_abs(comm(ops, a1, a1)), 1e-14 * scale);
  EXPECT_LE(max_abs(comm(ops, a1, b) + comm(ops, b, a1)), 1e-12 * scale);
  const double alpha = -1.7;
  EXPECT_LE(max_diff(comm(ops, alpha * a1 + a2, b), alpha * comm(ops, a1, b) + comm(ops, a2, b)), 1e-12 * scale);
  // R(const) = 0, so Comm(c, b) = -c R b.
  EXPECT_LE(max_diff(comm(ops, PeriodicField2D(n, 2.0), b), -2.0 * riesz_second(ops, b)), 1e-12 * scale);
}

TEST(Evf, CommOfTwoSingleModes) {
  const int n = 32;
  SpectralOps ops(n);
  const auto sx = PeriodicField2D::sample(n, [](double x, double) { return std::sin(x); });
  const auto sy = PeriodicField2D::sample(n, [](double, double y) { return std::sin(y); });
  const auto c = comm(ops, sx, sy);
  EXPECT_LE((c.xx - sx * sy).max_abs(), 1e-10);
  EXPECT_LE(c.xy.max_abs(), 1e-10);
  EXPECT_LE((c.yy + sx * sy).max_abs(), 1e-10);
}

TEST(Evf, DivergenceIdentity) {
  std::mt19937_64 rng(4);
  const int n = 64;
  SpectralOps ops(n);
  const SymTensorField2D s{band_limited(rng, n), band_limited(rng, n), band_limited(rng, n)};
  const auto rho = band_limited(rng, n, 6, 2.0), tau = band_limited(rng, n);
  const PeriodicField2D zero(n);
  EXPECT_EQ(div_identity_residual(ops, SymTensorField2D{zero, zero, zero}, rho, tau).residual, 0.0);
  EXPECT_EQ(div_identity_residual(ops, s, rho, zero).residual, 0.0);
  EXPECT_LE(div_identity_residual(ops, s, rho, tau).relative(), 1e-9);
  EXPECT_LE(div_identity_residual(ops, s, rho, PeriodicField2D(n, 1.0)).relative(), 1e-9);
}

// Closed-form inputs: the residual only measures the quadrature and the
// spectral inverse Laplacian, so it shrinks quickly under refinement.
TEST(Evf, AnalyticIdentityResidualDecaysSpectrally) {
  std::mt19937_64 rng(5);
  const double r = 0.6;
  const auto sxx = SmoothFieldSpec::random(rng, r), sxy = SmoothFieldSpec::random(rng, r),
             syy = SmoothFieldSpec::random(rng, r), rho = SmoothFieldSpec::random(rng, r, 4, 2.0),
             tau = SmoothFieldSpec::random(rng, r);
  std::vector<double> res;
  for (int n : {32, 64, 128}) res.push_back(div_identity_residual_analytic(SpectralOps(n), sxx, sxy, syy, rho, tau).relative());
  EXPECT_GT(res[0] / res[1], 10.0);
  EXPECT_GT(res[1] / res[2], 10.0);
  EXPECT_LE(res[2], 1e-9);
}

TEST(Evf, SmoothFieldDerivativesMatchDifferences) {
  std::mt19937_64 rng(6);
  const auto f = SmoothFieldSpec::random(rng, 0.6);
  const double x = 1.1, y = 2.3, h = 1e-4;
  const auto d = f.derivatives(x, y);
  EXPECT_NEAR(d.value, f(x, y), 1e-14);
  EXPECT_NEAR(d.dx, (f(x + h, y) - f(x - h, y)) / (2 * h), 1e-6);
  EXPECT_NEAR(d.dy, (f(x, y + h) - f(x, y - h)) / (2 * h), 1e-6);
  EXPECT_NEAR(d.dxx, (f(x + h, y) - 2 * f(x, y) + f(x - h, y)) / (h * h), 1e-4);
  EXPECT_NEAR(d.dyy, (f(x, y + h) - 2 * f(x, y) + f(x, y - h)) / (h * h), 1e-4);
  EXPECT_NEAR(d.dxy, (f(x + h, y + h) - f(x + h, y - h) - f(x - h, y + h) + f(x - h, y - h)) / (4 * h * h), 1e-4);
}

TEST(Evf, EffectiveViscousFlux) {
  const int n = 16;
  std::mt19937_64 rng(7);
  const auto [mu, lam] = testing_support::random_admissible(rng, 3);
  const ViscosityMatrices visc(mu, lam);
  std::vector<PeriodicField2D> p, divu, zero(3, PeriodicField2D(n));
  for (int i = 0; i < 3; ++i) {
    p.push_back(band_limited(rng, n, 4, 2.0));
    divu.push_back(band_limited(rng, n, 4));
  }
  const auto same = effective_viscous_flux(p, zero, visc);
  for (int i = 0; i < 3; ++i) EXPECT_EQ(same[i].values(), p[i].values());
  const auto f = effective_viscous_flux(p, divu, visc);
  for (int i = 0; i < 3; ++i)
    for (int k = 0; k < n * n; ++k) {
      double oracle = p[i].values()[k];
      for (int m = 0; m < 3; ++m) oracle -= visc.nu()(i, m) * divu[m].values()[k];
      EXPECT_NEAR(f[i].values()[k], oracle, 1e-14 * (1 + std::abs(oracle)));
    }
  const ViscosityMatrices half_id(0.5 * Matrix::Identity(3, 3), Matrix::Zero(3, 3));
  const auto pure = effective_viscous_flux(zero, divu, half_id);
  for (int i = 0; i < 3; ++i) EXPECT_EQ(pure[i].values(), (-1.0 * divu[i]).values());
  EXPECT_THROW(effective_viscous_flux(p, {divu[0]}, visc), ConfigError);
}

TEST(Evf, CommExpansions) {
  std::mt19937_64 rng(8);
  const int n = 64;
  SpectralOps ops(n);
  const VectorField2D w{band_limited(rng, n), band_limited(rng, n)};
  const VectorField2D u{band_limited(rng, n), band_limited(rng, n)};
  const auto ri = band_limited(rng, n, 6, 2.0), rj = band_limited(rng, n, 6, 2.0);
  const VectorField2D zero{PeriodicField2D(n), PeriodicField2D(n)};
  const auto none_u = comm_expansion_residual(ops, w, zero, ri, rj);
  EXPECT_EQ(none_u.steady, 0.0);
  EXPECT_EQ(none_u.unsteady, 0.0);
  const auto none_w = comm_expansion_residual(ops, zero, u, ri, rj);
  EXPECT_EQ(none_w.steady, 0.0);
  EXPECT_EQ(none_w.unsteady, 0.0);
  const auto r = comm_expansion_residual(ops, w, u, ri, rj);
  EXPECT_LE(r.steady_relative(), 1e-9);
  EXPECT_LE(r.unsteady_relative(), 1e-9);
}

TEST(Evf, Cutoff) {
  EXPECT_EQ(cutoff(1.0, 2.0), 1.0);
  EXPECT_EQ(cutoff(3.0, 2.0), 2.0);
  EXPECT_THROW(cutoff(1.0, 0.0), DomainError);
  EXPECT_THROW(cutoff(1.0, -1.0), DomainError);
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 100; ++trial) {
    const auto rho = band_limited(rng, 16, 4, 2.0).map([](double v) { return std::abs(v); });
    const double r = 0.5 + trial * 0.02;
    EXPECT_LE(cutoff(rho, r).max_abs(), r);
  }
  EXPECT_THROW(cutoff(PeriodicField2D(16), 0.0), DomainError);
}

// 10^4 sample points: monotone, 1-Lipschitz, bounded by min(s, r), idempotent.
TEST(Evf, CutoffAlgebraicProperties) {
  std::mt19937_64 rng(10);
  std::uniform_real_distribution<double> s(-5.0, 10.0), rr(0.01, 6.0);
  for (int k = 0; k < 10000; ++k) {
    const double a = s(rng), b = s(rng), r = rr(rng);
    const double ta = cutoff(a, r), tb = cutoff(b, r);
    if (a <= b) {
      EXPECT_LE(ta, tb);
    } else {
      EXPECT_GE(ta, tb);
    }
    EXPECT_LE(std::abs(ta - tb), std::abs(a - b));
    EXPECT_EQ(cutoff(ta, r), ta);
    if (a >= 0) {
      EXPECT_LE(ta, std::min(a, r));
    }
  }
}

TEST(Evf, WeakLimitWithoutOscillation) {
  std::mt19937_64 rng(11);
  const int n = 256;
  SpectralOps ops(n);
  OscillatorySequenceSpec spec;
  spec.a0 = SmoothFieldSpec::random(rng, 0.5, 4, 1.0).sample(n);
  spec.b0 = SmoothFieldSpec::random(rng, 0.5, 4, -0.5).sample(n);
  spec.amp_a = 0.0;
  spec.amp_b = 0.0;
  const auto phi = SmoothFieldSpec::random(rng, 0.5, 4, 1.0).sample(n);
  const auto t = weak_limit_experiment(ops, spec, phi);
  for (const auto& row : t.rows) {
    EXPECT_LE(row.product_gap, 1e-10);
    EXPECT_LE(row.comm_gap, 1e-10);
  }
}

TEST(Evf, WeakLimitOfPureSines) {
  const int n = 256;
  SpectralOps ops(n);
  std::mt19937_64 rng(12);
  OscillatorySequenceSpec spec;
  spec.a0 = PeriodicField2D(n);
  spec.b0 = PeriodicField2D(n);
  const auto phi = SmoothFieldSpec::random(rng, 0.5, 4, 1.0).sample(n);
  const auto t = weak_limit_experiment(ops, spec, phi);
  const double limit = std::abs(0.5 * phi.integral());
  EXPECT_NEAR(t.analytic_product_limit, limit, 1e-12 * limit);
  EXPECT_NEAR(t.rows.back().product_gap, limit, 0.01 * limit);
  for (const auto& row : t.rows) EXPECT_EQ(row.comm_gap, 0.0);  // Comm(a, a) vanishes
}

TEST(Evf, WeakLimitCommGapDecays) {
  const int n = 256;
  SpectralOps ops(n);
  std::mt19937_64 rng(13);
  OscillatorySequenceSpec spec;
  spec.a0 = SmoothFieldSpec::random(rng, 0.5, 4, 1.0).sample(n);
  spec.b0 = SmoothFieldSpec::random(rng, 0.5, 4, -0.5).sample(n);
  const auto phi = SmoothFieldSpec::random(rng, 0.5, 4, 1.0).sample(n);
  const auto t = weak_limit_experiment(ops, spec, phi);
  for (std::size_t k = 1; k < t.rows.size(); ++k) EXPECT_LT(t.rows[k].comm_gap, t.rows[k - 1].comm_gap);
  EXPECT_LE(t.comm_rate_exponent, -0.9);
  EXPECT_NEAR(t.rows.back().product_gap, t.analytic_product_limit, 0.01 * t.analytic_product_limit);
}

TEST(Evf, WeakLimitRejectsUnresolvedFrequencies) {
  SpectralOps ops(64);
  OscillatorySequenceSpec spec;
  spec.a0 = PeriodicField2D(64);
  spec.b0 = PeriodicField2D(64);
  spec.indices = {4, 16};
  EXPECT_THROW(weak_limit_experiment(ops, spec, PeriodicField2D(64, 1.0)), ConfigError);
  spec.indices = {4};
  spec.wave = {0, 0};
  EXPECT_THROW(weak_limit_experiment(ops, spec, PeriodicField2D(64, 1.0)), ConfigError);
}

TEST(Evf, FittedRateExponent) {
  EXPECT_NEAR(fitted_rate_exponent({4, 8, 16, 32}, {1.0 / 4, 1.0 / 8, 1.0 / 16, 1.0 / 32}), -1.0, 1e-14);
  EXPECT_NEAR(fitted_rate_exponent({1, 2, 4}, {3, 12, 48}), 2.0, 1e-14);
  EXPECT_TRUE(std::isnan(fitted_rate_exponent({1, 2}, {1, 0})));
}

TEST(Evf, Renormalization) {
  const int n = 32;
  SpectralOps ops(n);
  // Solenoidal w = perp grad psi with constant rho.
  const auto psi = PeriodicField2D::sample(n, [](double x, double y) { return std::sin(x) * std::cos(2 * y); });
  const VectorField2D sol{ops.ddy(psi), -1.0 * ops.ddx(psi)};
  EXPECT_LE(renorm_residual(ops, PeriodicField2D(n, 1.3), sol).rho_div_w, 1e-12);
  std::mt19937_64 rng(14);
  const VectorField2D w{band_limited(rng, n), band_limited(rng, n)};
  EXPECT_LE(renorm_residual(ops, PeriodicField2D(n, 2.0), w).rho_div_w, 1e-12);
  for (int trial = 0; trial < 10; ++trial)
    EXPECT_LE(renorm_residual(ops, band_limited(rng, n, 6, 2.0), VectorField2D{band_limited(rng, n), band_limited(rng, n)})
                  .relative(),
              1e-10);
}

TEST(Evf, ReportRendering) {
  EvfReport report;
  report.add("residual", 0.1);
  report.effective_fluxes.push_back(PeriodicField2D(16, 2.0));
  const std::string text = report.render();
  EXPECT_NE(text.find("inverse_laplacian_convention=zero-mean\n"), std::string::npos);
  EXPECT_NE(text.find("residual=0.10000000000000001\n"), std::string::npos);
  EXPECT_NE(text.find("effective_flux_1_mean=2\n"), std::string::npos);
}
