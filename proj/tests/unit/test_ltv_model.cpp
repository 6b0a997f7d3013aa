#include <gtest/gtest.h>

#include "ltvwm/errors.hpp"
#include "ltvwm/ltv_model.hpp"
#include "ltvwm/scenarios.hpp"
#include "oracles.hpp"
#include "systems.hpp"

using namespace ltvwm;
using ltvwm::testing::constant_system;

namespace {

SystemTrajectory ex1(Step horizon = 1000) { return example1_system(horizon).sys; }

}  // namespace

TEST(ClosedLoop, Example1AtStepZero) {
  Eigen::MatrixXd expected(3, 3);
  expected << 1, 1, 0, 0, 1, 0.1, -4e-4, -3.65e-2, 0.895;
  EXPECT_TRUE(closed_loop_matrix(ex1(), 0).isApprox(expected, 1e-14));
}

TEST(ClosedLoop, ZeroGainOrZeroInputLeavesA) {
  auto sys = ex1(10);
  for (auto& k : sys.K) k.setZero();
  EXPECT_EQ(closed_loop_matrix(sys, 3), sys.A[3]);
  sys = ex1(10);
  for (auto& b : sys.B) b.setZero();
  EXPECT_EQ(closed_loop_matrix(sys, 3), sys.A[3]);
}

TEST(ObserverLoop, ZeroGainOrZeroOutputLeavesA) {
  auto sys = ex1(10);
  for (auto& l : sys.L) l.setZero();
  EXPECT_EQ(observer_loop_matrix(sys, 4), sys.A[4]);
  sys = ex1(10);
  for (auto& c : sys.C) c.setZero();
  EXPECT_EQ(observer_loop_matrix(sys, 4), sys.A[4]);
}

TEST(ObserverLoop, MatchesExplicitProduct) {
  const auto sys = ex1(10);
  Eigen::MatrixXd expected = sys.A[0];
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 2; ++k) expected(i, j) += sys.L[0](i, k) * sys.C[0](k, j);
  EXPECT_TRUE(observer_loop_matrix(sys, 0).isApprox(expected, 1e-15));
}

TEST(ClosedLoop, IndexOutOfRange) {
  const auto sys = ex1(10);
  EXPECT_THROW(closed_loop_matrix(sys, 10), IndexError);
  EXPECT_THROW(closed_loop_matrix(sys, -1), IndexError);
  EXPECT_THROW(observer_loop_matrix(sys, 10), IndexError);
}

TEST(Validate, Example1HasNoViolations) {
  const auto report = validate_system(ex1(1000));
  EXPECT_TRUE(report.ok());
  EXPECT_LT(report.max_radius_Abar, 1.0);
  EXPECT_LT(report.max_radius_Aunderline, 1.0);
  EXPECT_NEAR(report.min_covariance_eigenvalue, 1e-3, 1e-15);
}

TEST(Validate, StrictNormReadingFlagsExample1) {
  // Abar has a unit shear entry, so its 2-norm exceeds one even though it is stable.
  ValidationOptions opt;
  opt.measure = StabilityMeasure::spectral_norm;
  const auto report = validate_system(ex1(50), opt);
  EXPECT_FALSE(report.ok());
  EXPECT_GT(report.max_norm_Abar, 1.0);
}

TEST(Validate, SingularMeasurementNoiseAtStepZero) {
  auto sys = ex1(20);
  sys.sigma_z[0].setZero();
  const auto report = validate_system(sys);
  ASSERT_FALSE(report.ok());
  EXPECT_EQ(report.violations.front().assumption, "1");
  EXPECT_EQ(report.violations.front().step, 0);
}

TEST(Validate, UnstablePlantViolatesEveryStep) {
  const Eigen::MatrixXd i2 = Eigen::MatrixXd::Identity(2, 2);
  const auto sys = constant_system(2 * i2, i2, i2, Eigen::MatrixXd::Zero(2, 2), -1.5 * i2, i2, i2, i2, 15);
  const auto report = validate_system(sys);
  Step abar_hits = 0;
  for (const auto& v : report.violations) {
    if (v.assumption == "1" && v.what.find("A+BK") != std::string::npos) ++abar_hits;
  }
  EXPECT_EQ(abar_hits, 15);
  EXPECT_DOUBLE_EQ(report.max_radius_Abar, 2.0);
}

TEST(Validate, DimensionMismatchThrows) {
  auto sys = ex1(10);
  sys.C[5] = Eigen::MatrixXd::Zero(3, 3);
  EXPECT_THROW(validate_system(sys), DimensionError);
  sys = ex1(10);
  sys.A.pop_back();
  EXPECT_THROW(check_dimensions(sys), DimensionError);
}

TEST(Kappa, Example1IsTwo) { EXPECT_EQ(compute_kappa(ex1(10000), 10000), 2); }

TEST(Kappa, Example1Averages) {
  const Step n = 1000;
  const auto sys = ex1(n);
  EXPECT_LT(kappa_average(sys, n, 1).norm(), 1e-15);
  // C Abar B = [0, 0.1]^T at every step, summed over n = 2..N-1 and divided by N
  const Eigen::MatrixXd avg = kappa_average(sys, n, 2);
  EXPECT_NEAR(avg(0, 0), 0.0, 1e-15);
  EXPECT_NEAR(avg(1, 0), 0.1 * static_cast<double>(n - 2) / static_cast<double>(n), 1e-12);
}

TEST(Kappa, DirectFeedthroughGivesOne) {
  const Eigen::MatrixXd i2 = Eigen::MatrixXd::Identity(2, 2);
  const auto sys = constant_system(0.5 * i2, i2, i2, Eigen::MatrixXd::Zero(2, 2), -0.2 * i2, i2, i2, i2, 100);
  EXPECT_EQ(compute_kappa(sys, 100), 1);
}

TEST(Kappa, MonotoneInTolerance) {
  const auto sys = ex1(1000);
  int previous = 0;
  for (double tol : {1e-9, 1e-6, 1e-3, 5e-2}) {
    const int k = compute_kappa(sys, 1000, tol);
    EXPECT_GE(k, previous);
    previous = k;
  }
}

TEST(Kappa, UnobservableWatermark) {
  auto sys = ex1(100);
  for (auto& c : sys.C) c.setZero();
  EXPECT_THROW(compute_kappa(sys, 100), WatermarkUnobservable);
}

TEST(Kappa, HorizonMustCoverTenTimesSearch) { EXPECT_THROW(compute_kappa(ex1(20), 20), std::invalid_argument); }

TEST(Fingerprint, StableAndSensitive) {
  const auto a = ex1(100);
  auto b = ex1(100);
  EXPECT_EQ(fingerprint(a), fingerprint(b));
  b.A[42](0, 0) += 1e-15;
  EXPECT_NE(fingerprint(a), fingerprint(b));
  EXPECT_EQ(fingerprint_hex(0xabcULL), "0000000000000abc");
}

TEST(Property, RandomValidatedSystemsAreContractive) {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto sys = ltvwm::testing::random_stable_system(3, 1, 2, 30, seed);
    const auto report = validate_system(sys);
    EXPECT_TRUE(report.ok()) << "seed " << seed;
    for (Step n = 0; n < sys.horizon; ++n) {
      EXPECT_LT(closed_loop_matrix(sys, n).eigenvalues().cwiseAbs().maxCoeff(), 1.0);
    }
  }
}
