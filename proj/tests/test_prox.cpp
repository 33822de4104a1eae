#include "robust_doa/prox.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

namespace robust_doa {
namespace {

// The weight objective whose minimum over w >= 0 is the MLC value.
double weight_objective(const MlcParams& p, double mag, double w) {
  return w * std::log(mag / p.eta + 1.0) + 0.5 * p.gamma * (w - p.lam) * (w - p.lam);
}

TEST(MlcValue, ZeroAtOrigin) { EXPECT_EQ(mlc_value(MlcParams{1.0, 2.0, 0.5}, 0.0), 0.0); }

TEST(MlcValue, SaturatesAtCeiling) {
  const MlcParams p{1.0, 2.0, 0.4};
  EXPECT_EQ(mlc_value(p, Complex(3.0, 0.0)), 1.0);
  EXPECT_EQ(mlc_value(p, Complex(0.0, -50.0)), 1.0);
}

TEST(MlcValue, ContinuousAtBreakpoint) {
  const MlcParams p{1.3, 0.7, 0.25};
  const double bp = p.eta * (std::exp(p.gamma * p.lam) - 1.0);
  EXPECT_NEAR(mlc_value(p, bp), p.ceiling(), 1e-12);
  EXPECT_NEAR(mlc_value(p, std::nextafter(bp, 0.0)), p.ceiling(), 1e-12);
  EXPECT_EQ(mlc_value(p, bp * (1.0 + 1e-12)), p.ceiling());
}

TEST(MlcValue, NondecreasingAndBounded) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.05, 3.0);
  for (int trial = 0; trial < 50; ++trial) {
    const MlcParams p{u(rng), u(rng), u(rng)};
    double prev = 0.0;
    for (double r = 0.0; r < 3.0 * p.saturation_point() + 1.0; r += 0.01) {
      const double v = mlc_value(p, r);
      EXPECT_GE(v, prev - 1e-15);
      EXPECT_LE(v, p.ceiling() + 1e-15);
      prev = v;
    }
  }
}

TEST(VariationalWeight, Examples) {
  const MlcParams p{1.0, 2.0, 0.5};
  EXPECT_EQ(variational_weight(p, 0.0), 1.0);
  EXPECT_EQ(variational_weight(p, p.saturation_point() * 1.01), 0.0);
  EXPECT_EQ(variational_weight(p, 100.0), 0.0);
  // 1 - ln(2)/2
  EXPECT_NEAR(variational_weight(p, 0.5), 0.653426409720027, 1e-12);
  const auto grid = oracle::grid_then_polish(
      [&](double w) { return weight_objective(p, 0.5, w); }, 0.0, 2.0, 1e-4);
  EXPECT_NEAR(variational_weight(p, 0.5), grid.x, 1e-6);
}

TEST(VariationalWeight, MinimizesWeightObjective) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> par(0.1, 3.0);
  std::uniform_real_distribution<double> mag(0.0, 10.0);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * kPi);
  for (int i = 0; i < 200; ++i) {
    const MlcParams p{par(rng), par(rng), par(rng)};
    const Complex x = std::polar(mag(rng), phase(rng));
    const double w = variational_weight(p, x);
    const double best = weight_objective(p, std::abs(x), w);
    EXPECT_NEAR(best, mlc_value(p, x), 1e-12);
    for (double d : {-1e-3, 1e-3, 0.1, -0.1})
      if (w + d >= 0.0) { EXPECT_GE(weight_objective(p, std::abs(x), w + d), best - 1e-15); }
  }
}

TEST(LogProx, ZeroInput) { EXPECT_EQ(log_prox(1.0, 0.5, 0.0), Complex(0.0, 0.0)); }

TEST(LogProx, BelowThresholdIsZero) {
  // 2*sqrt(1) - 0.5 = 1.5
  EXPECT_EQ(log_prox(1.0, 0.5, 1.4), Complex(0.0, 0.0));
  EXPECT_EQ(log_prox(1.0, 0.5, Complex(0.0, 1.4)), Complex(0.0, 0.0));
}

TEST(LogProx, MatchesBruteForce) {
  const auto ref = oracle::log_prox_brute(0.25, 0.5, 2.0, 1e-6);
  const Complex out = log_prox(0.25, 0.5, 2.0);
  EXPECT_NEAR(out.real(), ref.x, 1e-7);
  EXPECT_NEAR(out.real(), 1.89564392373896, 1e-12);
  EXPECT_EQ(out.imag(), 0.0);
}

TEST(LogProx, StationaryPointUsesCorrectedDiscriminant) {
  // The stationary equation mu/(r + eta) + r - |c| = 0 has the root
  // ((|c| - eta) + sqrt((|c| + eta)^2 - 4 mu)) / 2.
  const double mu = 0.6, eta = 0.3, c = 2.5;
  const double r = std::abs(log_prox(mu, eta, c));
  EXPECT_NEAR(mu / (r + eta) + r - c, 0.0, 1e-12);
}

TEST(LogProx, GlobalOptimalityOnRandomInputs) {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> mu_d(0.01, 4.0), eta_d(0.1, 1.0), mag_d(0.0, 10.0),
      ph_d(0.0, 2.0 * kPi);
  for (int i = 0; i < 300; ++i) {
    const double mu = mu_d(rng), eta = eta_d(rng);
    const Complex c = std::polar(mag_d(rng), ph_d(rng));
    const Complex x = log_prox(mu, eta, c);
    const double got = oracle::log_prox_objective(mu, eta, std::abs(c), std::abs(x));
    const auto ref = oracle::log_prox_brute(mu, eta, std::abs(c));
    EXPECT_LE(got, ref.value + 1e-6);
    // Phase is preserved (or the output is zero).
    if (std::abs(x) > 0.0) { EXPECT_NEAR(std::arg(x / c), 0.0, 1e-12); }
  }
}

TEST(LogProx, PhaseEquivariant) {
  std::mt19937_64 rng(29);
  std::uniform_real_distribution<double> mu_d(0.01, 4.0), eta_d(0.1, 1.0), mag_d(0.0, 10.0),
      ph_d(0.0, 2.0 * kPi);
  for (int i = 0; i < 1000; ++i) {
    const double mu = mu_d(rng), eta = eta_d(rng);
    const Complex c = std::polar(mag_d(rng), ph_d(rng));
    const Complex rot = std::polar(1.0, ph_d(rng));
    EXPECT_LT(std::abs(log_prox(mu, eta, rot * c) - rot * log_prox(mu, eta, c)), 1e-12);
  }
}

TEST(MlcProx, SaturatedAnchorPassesInputThrough) {
  const MlcParams p{1.0, 2.0, 0.5};
  const Complex c(0.3, -0.2);
  EXPECT_EQ(mlc_prox(p, 0.5, c, p.saturation_point()), c);
  EXPECT_EQ(mlc_prox(p, 0.5, c, Complex(0.0, 10.0)), c);
}

TEST(MlcProx, ZeroInputZeroAnchor) {
  EXPECT_EQ(mlc_prox(MlcParams{1.0, 2.0, 0.5}, 0.25, 0.0, 0.0), Complex(0.0, 0.0));
}

TEST(MlcProx, ZeroAnchorUsesFullWeight) {
  const MlcParams p{1.0, 2.0, 0.5};
  const Complex out = mlc_prox(p, 0.25, 2.0, 0.0);
  EXPECT_EQ(out, log_prox(0.25, 0.5, 2.0));
  EXPECT_NEAR(out.real(), oracle::log_prox_brute(0.25, 0.5, 2.0, 1e-6).x, 1e-7);
}

TEST(MlcProx, FixedPointIsSelfConsistent) {
  const MlcParams p{1.0, 2.0, 0.5};
  for (double c : {0.5, 1.0, 1.5, 2.0, 3.0, 5.0}) {
    const Complex x = mlc_prox_fixed_point(p, 0.5, c, 0.0);
    EXPECT_EQ(mlc_prox(p, 0.5, c, x), x) << "c = " << c;
  }
}

TEST(RowSoftThreshold, ZeroThresholdIsIdentity) {
  std::mt19937_64 rng(1);
  const ComplexMatrix c = oracle::random_complex(rng, 5, 4);
  EXPECT_EQ(row_soft_threshold(c, 0.0), c);
}

TEST(RowSoftThreshold, SmallRowsVanish) {
  ComplexMatrix c(2, 2);
  c << Complex(0.3, 0.0), Complex(0.0, 0.4), Complex(3.0, 0.0), Complex(4.0, 0.0);
  const ComplexMatrix out = row_soft_threshold(c, 1.0);
  EXPECT_TRUE(out.row(0).isZero(0.0));
  EXPECT_NEAR(out(1, 0).real(), 2.4, 1e-15);
  EXPECT_NEAR(out(1, 1).real(), 3.2, 1e-15);
  const auto ray = oracle::row_shrink_brute(c.row(1), 1.0);
  EXPECT_LT((out.row(1) - ray).norm(), 1e-7);
}

TEST(RowSoftThreshold, RejectsNegativeThreshold) {
  EXPECT_THROW(row_soft_threshold(ComplexMatrix::Zero(1, 1), -1.0), DomainError);
}

double row_objective(const ComplexMatrix& x, const ComplexMatrix& c, double tau) {
  double l21 = 0.0;
  for (Eigen::Index i = 0; i < x.rows(); ++i) l21 += x.row(i).norm();
  return tau * l21 + 0.5 * (x - c).squaredNorm();
}

TEST(RowSoftThreshold, BeatsRandomPerturbationsAndShrinksRows) {
  std::mt19937_64 rng(41);
  std::uniform_real_distribution<double> tau_d(0.0, 3.0);
  for (int trial = 0; trial < 20; ++trial) {
    const ComplexMatrix c = oracle::random_complex(rng, 6, 4);
    const double tau = tau_d(rng);
    const ComplexMatrix x = row_soft_threshold(c, tau);
    const double best = row_objective(x, c, tau);
    for (int k = 0; k < 50; ++k) {
      const ComplexMatrix pert = x + oracle::random_complex(rng, 6, 4, 1e-3);
      EXPECT_LE(best, row_objective(pert, c, tau) + 1e-14);
    }
    for (Eigen::Index i = 0; i < c.rows(); ++i) {
      EXPECT_LE(x.row(i).norm(), c.row(i).norm() + 1e-15);
      EXPECT_LT((x.row(i) - oracle::row_shrink_brute(c.row(i), tau)).norm(), 1e-7);
    }
  }
}

}  // namespace
}  // namespace robust_doa
