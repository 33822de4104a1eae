#include "robust_doa/array_model.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>
#include <vector>

namespace robust_doa {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

ArrayGeometry ula(int m) { return ArrayGeometry{m, 0.5}; }

TEST(SteeringVector, BroadsideIsAllOnes) {
  const ComplexVector a = steering_vector(ula(4), 0.0);
  ASSERT_EQ(a.size(), 4);
  for (int m = 0; m < 4; ++m) EXPECT_EQ(a(m), Complex(1.0, 0.0));
}

TEST(SteeringVector, ThirtyDegreesHalfWave) {
  const ComplexVector a = steering_vector(ula(2), 30.0);
  EXPECT_EQ(a(0), Complex(1.0, 0.0));
  EXPECT_NEAR(a(1).real(), 0.0, 1e-12);
  EXPECT_NEAR(a(1).imag(), -1.0, 1e-12);
}

TEST(SteeringVector, MirroredAngleIsConjugate) {
  const ComplexVector pos = steering_vector(ula(3), 37.5);
  const ComplexVector neg = steering_vector(ula(3), -37.5);
  EXPECT_LT((neg - pos.conjugate()).norm(), 1e-15);
}

TEST(SteeringVector, RejectsAnglesOutsideHalfPlane) {
  EXPECT_THROW(steering_vector(ula(4), 90.5), DomainError);
  EXPECT_THROW(steering_vector(ula(4), -91.0), DomainError);
  EXPECT_NO_THROW(steering_vector(ula(4), 90.0));
}

TEST(SteeringVector, MatchesDefinitionAndHasUnitModulus) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> ang(-90.0, 90.0);
  for (int i = 0; i < 200; ++i) {
    const double th = ang(rng);
    const ComplexVector a = steering_vector(ula(10), th);
    EXPECT_LT((a - oracle::half_wave_steering(10, th)).norm(), 1e-12);
    for (int m = 0; m < 10; ++m) EXPECT_NEAR(std::abs(a(m)), 1.0, 1e-12);
  }
}

TEST(SteeringMatrix, ColumnsAreSteeringVectors) {
  const std::vector<double> one{12.0};
  EXPECT_EQ(steering_matrix(ula(5), one), steering_vector(ula(5), 12.0));

  const AngleGrid grid = AngleGrid::uniform(2.0);
  const ComplexMatrix a = steering_matrix(ula(10), grid.angles_deg());
  ASSERT_EQ(a.rows(), 10);
  ASSERT_EQ(a.cols(), 91);
  for (Eigen::Index k = 0; k < a.cols(); ++k) EXPECT_NEAR(a.col(k).norm(), std::sqrt(10.0), 1e-12);
  EXPECT_EQ(a, steering_matrix(ula(10), grid.angles_deg()));
}

TEST(SteeringMatrix, DistinctAnglesAreNotCollinear) {
  const std::vector<double> angles{-4.0, 6.0};
  const ComplexMatrix a = steering_matrix(ula(10), angles);
  const ComplexMatrix gram = a.adjoint() * a;
  EXPECT_NEAR(gram(0, 0).real(), 10.0, 1e-12);
  EXPECT_LT(std::abs(gram(0, 1)), 10.0 - 1e-3);
}

TEST(SteeringMatrix, RejectsEmptyList) {
  EXPECT_THROW(steering_matrix(ula(4), std::vector<double>{}), DomainError);
}

// Central difference of the steering vector in radians.
ComplexVector finite_difference(const ArrayGeometry& g, double deg, double h = 1e-6) {
  return (steering_vector(g, rad_to_deg(deg_to_rad(deg) + h)) -
          steering_vector(g, rad_to_deg(deg_to_rad(deg) - h))) /
         (2.0 * h);
}

TEST(SteeringDerivative, BroadsideClosedForm) {
  const std::vector<double> zero{0.0};
  const ComplexMatrix b = steering_derivative(ula(3), zero);
  EXPECT_EQ(b(0, 0), Complex(0.0, 0.0));
  EXPECT_NEAR(std::abs(b(1, 0) - Complex(0.0, -kPi)), 0.0, 1e-12);
  EXPECT_NEAR(std::abs(b(2, 0) - Complex(0.0, -2.0 * kPi)), 0.0, 1e-12);
  EXPECT_LT((b.col(0) - finite_difference(ula(3), 0.0)).norm(), 1e-5);
}

TEST(SteeringDerivative, TwentyDegreesMatchesFiniteDifference) {
  const std::vector<double> angle{20.0};
  const ComplexVector b = steering_derivative(ula(10), angle).col(0);
  const ComplexVector fd = finite_difference(ula(10), 20.0);
  EXPECT_LE((b - fd).norm() / b.norm(), 1e-6);
}

TEST(SteeringDerivative, RandomAnglesMatchFiniteDifference) {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> ang(-89.0, 89.0);
  for (int i = 0; i < 100; ++i) {
    const double th = ang(rng);
    const std::vector<double> angle{th};
    const ComplexVector b = steering_derivative(ula(10), angle).col(0);
    EXPECT_EQ(b(0), Complex(0.0, 0.0));
    const ComplexVector fd = finite_difference(ula(10), th);
    EXPECT_LE((b - fd).norm() / b.norm(), 1e-5) << "angle " << th;
  }
}

TEST(SteeringDerivative, RejectsEndfire) {
  EXPECT_THROW(steering_derivative(ula(4), std::vector<double>{90.0}), DomainError);
  EXPECT_THROW(steering_derivative(ula(4), std::vector<double>{-90.0}), DomainError);
}

TEST(AngleGrid, CoversHalfPlaneWithEndpoints) {
  const AngleGrid g = AngleGrid::uniform(2.0);
  ASSERT_EQ(g.size(), 91u);
  EXPECT_EQ(g[0], -90.0);
  EXPECT_EQ(g[90], 90.0);
  for (std::size_t i = 1; i < g.size(); ++i) EXPECT_NEAR(g[i] - g[i - 1], 2.0, 2.0 * 1e-12);
  EXPECT_EQ(AngleGrid::uniform(0.5).size(), 361u);
}

TEST(AngleGrid, RejectsSpacingThatDoesNotDivide180) {
  EXPECT_THROW(AngleGrid::uniform(7.0), DomainError);
  EXPECT_THROW(AngleGrid::uniform(0.0), DomainError);
  EXPECT_THROW(AngleGrid::uniform(-2.0), DomainError);
}

TEST(GridDictionary, UnitColumnsAndStepSizeBound) {
  const ComplexMatrix a = grid_dictionary(ula(10), AngleGrid::uniform(2.0));
  for (Eigen::Index k = 0; k < a.cols(); ++k) EXPECT_NEAR(a.col(k).norm(), 1.0, 1e-12);
  const double lmax = Eigen::SelfAdjointEigenSolver<ComplexMatrix>(a * a.adjoint())
                          .eigenvalues()
                          .maxCoeff();
  EXPECT_LE(lmax, 1.0 / 0.03);
}

ArrayScenario base_scenario() {
  ArrayScenario s;
  s.true_doas_deg = {-5.3, 21.7};
  s.num_snapshots = 40;
  s.snr_db = 10.0;
  s.sor_db = -20.0;
  s.outlier_prob = 0.1;
  s.rng_seed = 99;
  return s;
}

TEST(Synthesize, DecompositionIdentityAndMaskSupport) {
  const SnapshotData d = synthesize(base_scenario());
  const ComplexMatrix a = steering_matrix(ula(10), base_scenario().true_doas_deg);
  EXPECT_LT((d.observations - (d.clean_signal + d.gaussian_noise + d.outliers)).norm(), 1e-12);
  for (Eigen::Index i = 0; i < d.outliers.size(); ++i)
    if (!d.outlier_mask.data()[i]) { EXPECT_EQ(d.outliers.data()[i], Complex(0.0, 0.0)); }
  // Unit-modulus sources: each clean entry is a sum of K unit phasors.
  EXPECT_LE(d.clean_signal.cwiseAbs().maxCoeff(), 2.0 + 1e-12);
  (void)a;
}

TEST(Synthesize, NoOutliersWhenProbabilityIsZero) {
  ArrayScenario s = base_scenario();
  s.outlier_prob = 0.0;
  const SnapshotData d = synthesize(s);
  EXPECT_TRUE(d.outliers.isZero(0.0));
  EXPECT_FALSE(d.outlier_mask.any());
}

TEST(Synthesize, NoiselessObservationsEqualCleanSignal) {
  ArrayScenario s = base_scenario();
  s.snr_db = kInf;
  s.outlier_prob = 0.0;
  const SnapshotData d = synthesize(s);
  EXPECT_EQ(d.observations, d.clean_signal);
}

TEST(Synthesize, NoiseVarianceMatchesSnr) {
  ArrayScenario s = base_scenario();
  s.num_snapshots = 10000;
  s.outlier_prob = 0.0;
  const SnapshotData d = synthesize(s);
  const double var = d.gaussian_noise.squaredNorm() / static_cast<double>(d.gaussian_noise.size());
  EXPECT_NEAR(var, 0.1, 0.005);
  // Circular symmetry: real and imaginary parts carry half each.
  const double re_var = d.gaussian_noise.real().squaredNorm() / static_cast<double>(d.gaussian_noise.size());
  EXPECT_NEAR(re_var, 0.05, 0.0025);
}

TEST(Synthesize, OutlierDensityWithinThreeStandardErrors) {
  ArrayScenario s = base_scenario();
  s.num_snapshots = 100000;  // 10^6 mask entries
  const SnapshotData d = synthesize(s);
  const double n = static_cast<double>(d.outlier_mask.size());
  const double density = static_cast<double>(d.outlier_mask.count()) / n;
  const double se = std::sqrt(0.1 * 0.9 / n);
  EXPECT_LE(std::abs(density - 0.1), 3.0 * se);
}

TEST(Synthesize, SeedReproducesBitForBit) {
  const SnapshotData a = synthesize(base_scenario());
  const SnapshotData b = synthesize(base_scenario());
  EXPECT_EQ(a.observations, b.observations);
  EXPECT_EQ(a.outlier_mask, b.outlier_mask);
  ArrayScenario other = base_scenario();
  other.rng_seed = 100;
  EXPECT_NE(synthesize(other).observations, a.observations);
}

TEST(Synthesize, CoherentSourcesGiveRankOneSignal) {
  ArrayScenario s = base_scenario();
  s.coherent = true;
  const Eigen::VectorXd sv = Eigen::JacobiSVD<ComplexMatrix>(synthesize(s).clean_signal).singularValues();
  EXPECT_LT(sv(1) / sv(0), 1e-12);

  s.coherent = false;
  const Eigen::VectorXd sv2 = Eigen::JacobiSVD<ComplexMatrix>(synthesize(s).clean_signal).singularValues();
  EXPECT_GT(sv2(1) / sv2(0), 0.1);
}

TEST(Synthesize, RejectsInvalidScenarios) {
  ArrayScenario s = base_scenario();
  s.outlier_prob = 1.5;
  EXPECT_THROW(synthesize(s), DomainError);
  s = base_scenario();
  s.true_doas_deg = {10.0, 10.0};
  EXPECT_THROW(synthesize(s), DomainError);
  s = base_scenario();
  s.true_doas_deg = {90.0};
  EXPECT_THROW(synthesize(s), DomainError);
  s = base_scenario();
  s.geometry.num_elements = 1;
  EXPECT_THROW(synthesize(s), DomainError);
}

TEST(DeriveSeed, DistinctPerAxisAndTrial) {
  EXPECT_NE(derive_seed(1, 0, 0), derive_seed(1, 0, 1));
  EXPECT_NE(derive_seed(1, 0, 1), derive_seed(1, 1, 0));
  EXPECT_NE(derive_seed(1, 0, 0), derive_seed(2, 0, 0));
  EXPECT_EQ(derive_seed(5, 3, 7), derive_seed(5, 3, 7));
}

}  // namespace
}  // namespace robust_doa
