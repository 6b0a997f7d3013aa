#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "ltvwm/attacks.hpp"
#include "ltvwm/ltv_model.hpp"

namespace ltvwm {

/// Planar reference path. speed_profile[i] is the speed on the segment waypoints[i] -> waypoints[i+1].
struct ReferencePath {
  std::vector<Eigen::Vector2d> waypoints;
  std::vector<double> speed_profile;
  double dt = 0.05;
  double v_min = 0.5;
  double v_max = 30.0;

  double length() const;
};

/// Throws std::invalid_argument for fewer than three waypoints, repeated points, a speed profile
/// of the wrong size, speeds outside [v_min, v_max], or dt <= 0.
void validate_path(const ReferencePath& path);

/// CSV with header "x,y,speed"; the speed in row i applies to the segment leaving waypoint i
/// (the last row's speed is ignored).
ReferencePath load_path_csv(const std::filesystem::path& file, double dt);
void save_path_csv(const ReferencePath& path, const std::filesystem::path& file);

/// Desk-scale course: straight, left bend, straight, right bend, straight, with speeds between
/// 3 and 6 m/s, sampled once per time step over `duration_s` seconds.
ReferencePath default_reference_path(double dt = 0.05, double duration_s = 102.0);

struct ScenarioBundle {
  SystemTrajectory sys;
  std::optional<ReferencePath> reference;
  std::vector<std::string> labels;  ///< measurement channel names
  std::string notes;
};

/// The paper's three-state, one-input, two-output example with sinusoidally varying A_n.
ScenarioBundle example1_system(Step horizon);

struct VehicleNoise {
  Eigen::Vector3d process{1e-5, 1e-6, 1e-5};      ///< lateral, heading, speed
  Eigen::Vector3d measurement{1e-4, 1e-5, 1e-4};  ///< lateral, heading, speed
  Eigen::Vector2d watermark{0.02, 0.005};         ///< steering, acceleration
};

struct VehicleConfig {
  double wheelbase = 2.5;       ///< m
  double state_weight = 1.0;    ///< LQR Q = state_weight * I
  double input_weight = 0.1;    ///< LQR R = input_weight * I
  double duration_s = 100.0;    ///< simulated horizon; 0 uses the whole path
  VehicleNoise noise;
};

/// Per-step curvature and speed seen when driving the path at its speed profile for `steps` steps.
struct PathSamples {
  std::vector<double> curvature;
  std::vector<double> speed;
};
PathSamples sample_path(const ReferencePath& path, Step steps);

/// Kinematic bicycle linearized about the reference: states (lateral error, heading error,
/// speed error), inputs (steering, acceleration), all three states measured. K_n from a
/// finite-horizon Riccati recursion, L_n from the per-step steady-state Kalman gain.
/// Throws std::runtime_error naming the offending step if the result fails validate_system.
ScenarioBundle vehicle_scenario(const ReferencePath& path, const VehicleConfig& config = {});

/// Seconds to steps, rounded to the nearest step.
Step seconds_to_steps(double seconds, double dt);

// Streams mixed into the protocol base seed, one per pipeline stage.
inline constexpr std::uint64_t kCalibrationStream = 101;
inline constexpr std::uint64_t kRecordingStream = 102;
inline constexpr std::uint64_t kAttackedStream = 103;

struct ProtocolOptions {
  double attack_start_s = 50.0;
  double blend_s = 0.15;
  std::size_t calibration_count = 200;
  std::size_t attacked_count = 50;
  std::uint64_t base_seed = 42;
  Step window = 20;
  int kappa = 0;  ///< 0 = compute_kappa
  double false_alarm_rate = 0.002;
  bool use_G = true;
  AttackMode mode = AttackMode::replay;
  double alpha = -1.0;
  Step steps = 0;  ///< 0 = full horizon
};

/// Fully determined pipeline plan: calibration ensemble -> tables -> threshold -> recordings -> attacked runs.
struct ExperimentPlan {
  ProtocolOptions options;
  std::uint64_t sys_fingerprint = 0;
  Step steps = 0;
  int kappa = 1;
  Step start_step = 0;
  Step blend_steps = 0;
  std::uint64_t calibration_seed = 0;
  std::uint64_t recording_seed = 0;
  std::uint64_t attacked_seed = 0;

  /// Last step of the blend (start_step when there is no blend).
  Step blend_end_step() const { return start_step + std::max<Step>(blend_steps, 1) - 1; }
  nlohmann::json manifest() const;
};

ExperimentPlan experiment_protocol(const ScenarioBundle& bundle, const ProtocolOptions& options);

}  // namespace ltvwm
