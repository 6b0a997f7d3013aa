#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>

#include "ltvwm/errors.hpp"
#include "ltvwm/scenarios.hpp"

using namespace ltvwm;

namespace {

std::filesystem::path temp_file(const char* name) {
  return std::filesystem::temp_directory_path() / (std::string("ltvwm_scn_") + name);
}

ReferencePath straight_path(double speed, int points, double dt) {
  ReferencePath path;
  path.dt = dt;
  for (int i = 0; i < points; ++i) path.waypoints.emplace_back(0.5 * i, 0.0);
  path.speed_profile.assign(static_cast<std::size_t>(points - 1), speed);
  return path;
}

}  // namespace

TEST(Example1, MatricesAreLiteral) {
  const auto bundle = example1_system(500);
  const auto& sys = bundle.sys;
  ASSERT_EQ(sys.p(), 3);
  ASSERT_EQ(sys.q(), 1);
  ASSERT_EQ(sys.r(), 2);
  Eigen::MatrixXd a(3, 3);
  a << 1, 1 + 0.5 * std::sin(317.0 / 100.0), 0, 0, 1, 0.1, 0, 0, 1;
  EXPECT_EQ(sys.A[317], a);
  EXPECT_EQ(sys.A[0](0, 1), 1.0);
  Eigen::MatrixXd b(3, 1), c(2, 3), k(1, 3), l(3, 2);
  b << 0, 0, 1;
  c << 1, 0, 0, 0, 1, 0;
  k << -4e-4, -3.65e-2, -1.05e-1;
  l << -7e-2, -1, -2.2e-3, -1.4e-1, -1.6e-3, -4.5e-2;
  EXPECT_EQ(sys.B[200], b);
  EXPECT_EQ(sys.C[200], c);
  EXPECT_EQ(sys.K[200], k);
  EXPECT_EQ(sys.L[200], l);
  EXPECT_EQ(sys.sigma_w[10], 1e-3 * Eigen::MatrixXd::Identity(3, 3));
  EXPECT_EQ(sys.sigma_z[10], 1e-3 * Eigen::MatrixXd::Identity(2, 2));
  EXPECT_EQ(sys.sigma_e(0, 0), 1e-3);
  EXPECT_EQ(bundle.labels.size(), 2u);
  EXPECT_THROW(example1_system(0), std::invalid_argument);
}

TEST(Example1, KappaIsTwo) {
  const auto sys = example1_system(10000).sys;
  EXPECT_EQ(compute_kappa(sys, 10000), 2);
}

TEST(Example1, ValidOverTenThousandSteps) { EXPECT_TRUE(validate_system(example1_system(10000).sys).ok()); }

TEST(Path, DefaultPathIsValid) {
  const auto path = default_reference_path();
  EXPECT_NO_THROW(validate_path(path));
  EXPECT_GT(path.length(), 400.0);
  const auto samples = sample_path(path, 2000);
  // curvature on the first bend and the straight before it
  EXPECT_NEAR(samples.curvature[400], 0.05, 1e-6);
  EXPECT_NEAR(samples.curvature[100], 0.0, 1e-9);
  EXPECT_NEAR(samples.curvature[1200], -0.04, 1e-6);
}

TEST(Path, RejectsBadInput) {
  auto path = straight_path(3.0, 5, 0.05);
  path.speed_profile[2] = 0.0;
  EXPECT_THROW(validate_path(path), std::invalid_argument);
  path = straight_path(3.0, 5, 0.05);
  path.waypoints[2] = path.waypoints[1];
  EXPECT_THROW(validate_path(path), std::invalid_argument);
  path = straight_path(3.0, 2, 0.05);
  EXPECT_THROW(validate_path(path), std::invalid_argument);
  path = straight_path(3.0, 5, 0.05);
  path.speed_profile.pop_back();
  EXPECT_THROW(validate_path(path), std::invalid_argument);
}

TEST(Path, CsvRoundTrip) {
  const auto path = default_reference_path(0.05, 10.0);
  const auto file = temp_file("path.csv");
  save_path_csv(path, file);
  const auto loaded = load_path_csv(file, 0.05);
  ASSERT_EQ(loaded.waypoints.size(), path.waypoints.size());
  for (std::size_t i = 0; i < path.waypoints.size(); ++i) EXPECT_EQ(loaded.waypoints[i], path.waypoints[i]);
  EXPECT_EQ(loaded.speed_profile, path.speed_profile);
  std::filesystem::remove(file);
  EXPECT_THROW(load_path_csv(temp_file("missing.csv"), 0.05), FormatError);
}

TEST(Path, TooShortForHorizon) {
  const auto path = straight_path(5.0, 10, 0.05);
  EXPECT_THROW(sample_path(path, 1000), std::invalid_argument);
}

TEST(Vehicle, StraightConstantSpeedIsTimeInvariant) {
  const auto path = straight_path(4.0, 400, 0.05);
  VehicleConfig cfg;
  cfg.duration_s = 5.0;
  const auto bundle = vehicle_scenario(path, cfg);
  const auto& sys = bundle.sys;
  ASSERT_EQ(sys.horizon, 100);
  for (Step n = 1; n < sys.horizon; ++n) {
    EXPECT_EQ(sys.A[n], sys.A[0]);
    EXPECT_EQ(sys.B[n], sys.B[0]);
  }
  EXPECT_DOUBLE_EQ(sys.A[0](0, 1), 0.05 * 4.0);
  EXPECT_DOUBLE_EQ(sys.B[0](1, 0), 0.05 * 4.0 / 2.5);
}

TEST(Vehicle, DefaultScenarioValidates) {
  const auto bundle = vehicle_scenario(default_reference_path());
  const auto& sys = bundle.sys;
  EXPECT_EQ(sys.horizon, 2000);
  EXPECT_DOUBLE_EQ(sys.dt, 0.05);
  EXPECT_TRUE(validate_system(sys).ok());
  EXPECT_EQ(compute_kappa(sys, sys.horizon), 1);
  EXPECT_EQ(sys.sigma_e, Eigen::Vector2d(0.02, 0.005).asDiagonal().toDenseMatrix());
  EXPECT_EQ(bundle.labels.size(), 3u);
  ASSERT_TRUE(bundle.reference.has_value());
}

TEST(Vehicle, NominalTrackingErrorDecays) {
  const auto sys = vehicle_scenario(default_reference_path()).sys;
  // noise-free closed loop with a perfect observer: x+ = (A + B K) x
  Eigen::VectorXd x(3);
  x << 0.5, 0.05, 0.3;
  const double start = x.norm();
  const Step settling = 200;  // 10 s
  Step halved = -1;
  for (Step n = 0; n < settling; ++n) {
    x = (sys.A[n] + sys.B[n] * sys.K[n]) * x;
    if (x.norm() <= 0.5 * start) {
      halved = n;
      break;
    }
  }
  EXPECT_GE(halved, 0);
}

TEST(Vehicle, RejectsBadConfig) {
  VehicleConfig cfg;
  cfg.wheelbase = 0.0;
  EXPECT_THROW(vehicle_scenario(default_reference_path(), cfg), std::invalid_argument);
}

TEST(Protocol, UnitConversions) {
  const auto bundle = vehicle_scenario(default_reference_path());
  ProtocolOptions opt;
  const auto plan = experiment_protocol(bundle, opt);
  EXPECT_EQ(plan.start_step, 1000);
  EXPECT_EQ(plan.blend_steps, 3);
  EXPECT_EQ(plan.blend_end_step(), 1002);
  EXPECT_EQ(plan.kappa, 1);
  EXPECT_EQ(plan.steps, 2000);
}

TEST(Protocol, DeterministicManifest) {
  const auto bundle = example1_system(1000);
  ProtocolOptions opt;
  opt.attack_start_s = 500;
  opt.calibration_count = 200;
  opt.attacked_count = 20;
  const auto a = experiment_protocol(bundle, opt).manifest();
  const auto b = experiment_protocol(bundle, opt).manifest();
  EXPECT_EQ(a, b);
  EXPECT_EQ(a["kappa"], 2);
  EXPECT_EQ(a["stages"].size(), 6u);
  opt.base_seed = 43;
  EXPECT_NE(experiment_protocol(bundle, opt).manifest()["seeds"], a["seeds"]);
}

TEST(Protocol, AttackStartOutsideHorizon) {
  const auto bundle = example1_system(100);
  ProtocolOptions opt;
  opt.attack_start_s = 100.0;
  EXPECT_THROW(experiment_protocol(bundle, opt), std::invalid_argument);
  opt.attack_start_s = -1.0;
  EXPECT_THROW(experiment_protocol(bundle, opt), std::invalid_argument);
}
