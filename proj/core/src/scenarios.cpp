#include "ltvwm/scenarios.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "ltvwm/errors.hpp"
#include "ltvwm/file_util.hpp"
#include "ltvwm/linalg.hpp"
#include "ltvwm/rng.hpp"

namespace ltvwm {
namespace {

// signed curvature of the circle through three points
double menger_curvature(const Eigen::Vector2d& a, const Eigen::Vector2d& b, const Eigen::Vector2d& c) {
  const Eigen::Vector2d ab = b - a;
  const Eigen::Vector2d bc = c - b;
  const Eigen::Vector2d ac = c - a;
  const double cross = ab.x() * bc.y() - ab.y() * bc.x();
  const double denom = ab.norm() * bc.norm() * ac.norm();
  return denom > 0.0 ? 2.0 * cross / denom : 0.0;
}

double interp(double t, const std::vector<double>& ts, const std::vector<double>& vs) {
  if (t <= ts.front()) return vs.front();
  for (std::size_t i = 1; i < ts.size(); ++i) {
    if (t <= ts[i]) return vs[i - 1] + (vs[i] - vs[i - 1]) * (t - ts[i - 1]) / (ts[i] - ts[i - 1]);
  }
  return vs.back();
}

}  // namespace

double ReferencePath::length() const {
  double total = 0.0;
  for (std::size_t i = 1; i < waypoints.size(); ++i) total += (waypoints[i] - waypoints[i - 1]).norm();
  return total;
}

void validate_path(const ReferencePath& path) {
  if (!(path.dt > 0.0)) throw std::invalid_argument("path dt must be positive");
  if (path.waypoints.size() < 3) throw std::invalid_argument("path needs at least three waypoints");
  if (path.speed_profile.size() != path.waypoints.size() - 1) {
    throw std::invalid_argument("speed profile must have one entry per segment");
  }
  if (!(path.v_min > 0.0) || path.v_max < path.v_min) throw std::invalid_argument("invalid speed bounds");
  for (std::size_t i = 0; i + 1 < path.waypoints.size(); ++i) {
    if (!path.waypoints[i].allFinite() || (path.waypoints[i + 1] - path.waypoints[i]).norm() <= 1e-9) {
      throw std::invalid_argument("path has a degenerate segment at waypoint " + std::to_string(i));
    }
    const double v = path.speed_profile[i];
    if (!(v >= path.v_min && v <= path.v_max)) {
      throw std::invalid_argument("segment " + std::to_string(i) + " speed " + std::to_string(v) +
                                  " outside [v_min, v_max]");
    }
  }
}

ReferencePath load_path_csv(const std::filesystem::path& file, double dt) {
  std::ifstream in(file);
  if (!in) throw FormatError("cannot open path file " + file.string());
  std::string line;
  if (!std::getline(in, line)) throw FormatError("empty path file " + file.string());
  ReferencePath path;
  path.dt = dt;
  std::vector<double> speeds;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty() || line[0] == '#') continue;
    std::stringstream ss(line);
    std::string cell;
    double vals[3];
    for (double& v : vals) {
      if (!std::getline(ss, cell, ',')) throw FormatError("path row " + std::to_string(row) + ": expected x,y,speed");
      try {
        v = std::stod(cell);
      } catch (const std::exception&) {
        throw FormatError("path row " + std::to_string(row) + ": not a number: " + cell);
      }
    }
    path.waypoints.emplace_back(vals[0], vals[1]);
    speeds.push_back(vals[2]);
  }
  if (speeds.size() < 3) throw FormatError("path file needs at least three waypoints");
  speeds.pop_back();
  path.speed_profile = std::move(speeds);
  validate_path(path);
  return path;
}

void save_path_csv(const ReferencePath& path, const std::filesystem::path& file) {
  std::ostringstream out;
  out.precision(17);
  out << "x,y,speed\n";
  for (std::size_t i = 0; i < path.waypoints.size(); ++i) {
    const double v = i < path.speed_profile.size() ? path.speed_profile[i] : path.speed_profile.back();
    out << path.waypoints[i].x() << ',' << path.waypoints[i].y() << ',' << v << '\n';
  }
  atomic_write(file, out.str());
}

ReferencePath default_reference_path(double dt, double duration_s) {
  if (!(dt > 0.0) || !(duration_s > 0.0)) throw std::invalid_argument("dt and duration must be positive");
  const std::vector<double> knots{0, 20, 40, 60, 80, 100};
  const std::vector<double> speeds{3, 5, 6, 4, 5, 3};
  const auto steps = static_cast<Step>(std::ceil(duration_s / dt));
  ReferencePath path;
  path.dt = dt;
  Eigen::Vector2d pos = Eigen::Vector2d::Zero();
  double heading = 0.0;
  path.waypoints.push_back(pos);
  for (Step n = 0; n < steps; ++n) {
    const double t = static_cast<double>(n) * dt;
    const double v = interp(t, knots, speeds);
    double curvature = 0.0;
    if (t > 15.0 && t < 30.0) curvature = 0.05;
    if (t > 55.0 && t < 70.0) curvature = -0.04;
    // exact arc for constant curvature over the step
    const double ds = v * dt;
    if (curvature == 0.0) {
      pos += ds * Eigen::Vector2d(std::cos(heading), std::sin(heading));
    } else {
      const double dh = curvature * ds;
      pos += Eigen::Vector2d(std::sin(heading + dh) - std::sin(heading), std::cos(heading) - std::cos(heading + dh)) /
             curvature;
      heading += dh;
    }
    path.waypoints.push_back(pos);
    path.speed_profile.push_back(v);
  }
  return path;
}

PathSamples sample_path(const ReferencePath& path, Step steps) {
  validate_path(path);
  const std::size_t segs = path.speed_profile.size();
  std::vector<double> seg_len(segs);
  for (std::size_t i = 0; i < segs; ++i) seg_len[i] = (path.waypoints[i + 1] - path.waypoints[i]).norm();
  // curvature per segment: mean of the Menger curvatures at its two ends (zero at path ends)
  std::vector<double> node_k(path.waypoints.size(), 0.0);
  for (std::size_t i = 1; i + 1 < path.waypoints.size(); ++i) {
    node_k[i] = menger_curvature(path.waypoints[i - 1], path.waypoints[i], path.waypoints[i + 1]);
  }
  PathSamples out;
  out.curvature.reserve(static_cast<std::size_t>(steps));
  out.speed.reserve(static_cast<std::size_t>(steps));
  std::size_t seg = 0;
  double along = 0.0;  // distance into the current segment
  for (Step n = 0; n < steps; ++n) {
    while (seg < segs && along >= seg_len[seg]) {
      along -= seg_len[seg];
      ++seg;
    }
    if (seg >= segs) {
      throw std::invalid_argument("path too short for " + std::to_string(steps) + " steps (ends at step " +
                                  std::to_string(n) + ")");
    }
    const double v = path.speed_profile[seg];
    out.speed.push_back(v);
    out.curvature.push_back(0.5 * (node_k[seg] + node_k[seg + 1]));
    along += v * path.dt;
  }
  return out;
}

Step seconds_to_steps(double seconds, double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("dt must be positive");
  return static_cast<Step>(std::llround(seconds / dt));
}

ScenarioBundle example1_system(Step horizon) {
  if (horizon < 1) throw std::invalid_argument("horizon must be >= 1");
  SystemTrajectory sys;
  sys.horizon = horizon;
  sys.dt = 1.0;
  Eigen::MatrixXd b(3, 1);
  b << 0, 0, 1;
  Eigen::MatrixXd c(2, 3);
  c << 1, 0, 0, 0, 1, 0;
  Eigen::MatrixXd k(1, 3);
  k << -4e-4, -3.65e-2, -1.05e-1;
  Eigen::MatrixXd l(3, 2);
  l << -7e-2, -1, -2.2e-3, -1.4e-1, -1.6e-3, -4.5e-2;
  const auto n_mat = static_cast<std::size_t>(horizon);
  sys.A.reserve(n_mat);
  for (Step n = 0; n < horizon; ++n) {
    Eigen::MatrixXd a(3, 3);
    a << 1, 1 + 0.5 * std::sin(static_cast<double>(n) / 100.0), 0, 0, 1, 0.1, 0, 0, 1;
    sys.A.push_back(std::move(a));
  }
  sys.B.assign(n_mat, b);
  sys.C.assign(n_mat, c);
  sys.K.assign(n_mat, k);
  sys.L.assign(n_mat, l);
  sys.sigma_w.assign(n_mat, 1e-3 * Eigen::MatrixXd::Identity(3, 3));
  sys.sigma_z.assign(n_mat, 1e-3 * Eigen::MatrixXd::Identity(2, 2));
  sys.sigma_e = Eigen::MatrixXd::Constant(1, 1, 1e-3);

  ScenarioBundle bundle;
  bundle.sys = std::move(sys);
  bundle.labels = {"y1", "y2"};
  bundle.notes = "example1: sinusoidally time-varying three-state plant, dt = 1 s";
  return bundle;
}

ScenarioBundle vehicle_scenario(const ReferencePath& path, const VehicleConfig& config) {
  validate_path(path);
  if (!(config.wheelbase > 0.0) || !(config.state_weight > 0.0) || !(config.input_weight > 0.0)) {
    throw std::invalid_argument("vehicle wheelbase and LQR weights must be positive");
  }
  const double dt = path.dt;
  Step steps = 0;
  if (config.duration_s > 0.0) {
    steps = seconds_to_steps(config.duration_s, dt);
  } else {
    // whole path at the profiled speeds
    double t = 0.0;
    for (std::size_t i = 0; i < path.speed_profile.size(); ++i) {
      t += (path.waypoints[i + 1] - path.waypoints[i]).norm() / path.speed_profile[i];
    }
    steps = static_cast<Step>(std::floor(t / dt));
  }
  if (steps < 2) throw std::invalid_argument("vehicle horizon must cover at least two steps");
  const PathSamples samples = sample_path(path, steps);

  SystemTrajectory sys;
  sys.horizon = steps;
  sys.dt = dt;
  const auto n_mat = static_cast<std::size_t>(steps);
  sys.A.resize(n_mat);
  sys.B.resize(n_mat);
  for (std::size_t n = 0; n < n_mat; ++n) {
    const double v = samples.speed[n];
    const double kappa = samples.curvature[n];
    const double steer = std::atan(config.wheelbase * kappa);
    const double cos2 = std::cos(steer) * std::cos(steer);
    Eigen::MatrixXd a = Eigen::MatrixXd::Identity(3, 3);
    a(0, 1) = dt * v;
    a(1, 2) = dt * kappa;
    Eigen::MatrixXd b = Eigen::MatrixXd::Zero(3, 2);
    b(1, 0) = dt * v / (config.wheelbase * cos2);
    b(2, 1) = dt;
    sys.A[n] = std::move(a);
    sys.B[n] = std::move(b);
  }
  sys.C.assign(n_mat, Eigen::MatrixXd::Identity(3, 3));
  sys.sigma_w.assign(n_mat, config.noise.process.asDiagonal().toDenseMatrix());
  sys.sigma_z.assign(n_mat, config.noise.measurement.asDiagonal().toDenseMatrix());
  sys.sigma_e = config.noise.watermark.asDiagonal().toDenseMatrix();

  // Finite-horizon LQR; the terminal cost is the last step's stationary solution so the
  // final gains are not weakened.
  const Eigen::MatrixXd qw = config.state_weight * Eigen::MatrixXd::Identity(3, 3);
  const Eigen::MatrixXd rw = config.input_weight * Eigen::MatrixXd::Identity(2, 2);
  Eigen::MatrixXd p = linalg::solve_dare(sys.A.back(), sys.B.back(), qw, rw);
  sys.K.resize(n_mat);
  for (std::size_t i = n_mat; i-- > 0;) {
    const Eigen::MatrixXd& a = sys.A[i];
    const Eigen::MatrixXd& b = sys.B[i];
    const Eigen::MatrixXd btp = b.transpose() * p;
    sys.K[i] = -(rw + btp * b).ldlt().solve(btp * a);
    p = linalg::symmetrize(qw + a.transpose() * p * (a + b * sys.K[i]));
    if (!p.allFinite()) throw ConditioningError("LQR Riccati recursion diverged at step " + std::to_string(i));
  }

  // Stationary Kalman predictor gain per step, reused while A_n is unchanged.
  sys.L.resize(n_mat);
  for (std::size_t n = 0; n < n_mat; ++n) {
    if (n > 0 && sys.A[n] == sys.A[n - 1]) {
      sys.L[n] = sys.L[n - 1];
      continue;
    }
    const Eigen::MatrixXd& a = sys.A[n];
    const Eigen::MatrixXd& c = sys.C[n];
    const Eigen::MatrixXd pp = linalg::solve_dare(a.transpose(), c.transpose(), sys.sigma_w[n], sys.sigma_z[n]);
    const Eigen::MatrixXd innov = c * pp * c.transpose() + sys.sigma_z[n];
    sys.L[n] = -(a * pp * c.transpose()) * innov.inverse();
  }

  const ValidationReport report = validate_system(sys);
  if (!report.ok()) {
    const Violation& first = report.violations.front();
    throw std::runtime_error("vehicle scenario fails assumption " + first.assumption + " at step " +
                             std::to_string(first.step) + ": " + first.what);
  }

  ScenarioBundle bundle;
  bundle.sys = std::move(sys);
  bundle.reference = path;
  bundle.labels = {"lateral_error", "heading_error", "speed_error"};
  bundle.notes = "vehicle: kinematic bicycle linearized about the reference path, LQR tracking, Kalman observer";
  return bundle;
}

nlohmann::json ExperimentPlan::manifest() const {
  nlohmann::json j;
  j["schema"] = "ltvwm.experiment/1";
  j["system_fingerprint"] = fingerprint_hex(sys_fingerprint);
  j["steps"] = steps;
  j["kappa"] = kappa;
  j["window"] = options.window;
  j["false_alarm_rate"] = options.false_alarm_rate;
  j["use_G"] = options.use_G;
  j["attack"] = {{"mode", options.mode == AttackMode::replay ? "replay" : "generalized"},
                 {"alpha", options.alpha},
                 {"start_s", options.attack_start_s},
                 {"start_step", start_step},
                 {"blend_s", options.blend_s},
                 {"blend_steps", blend_steps}};
  j["seeds"] = {{"base", options.base_seed},
                {"calibration", calibration_seed},
                {"recording", recording_seed},
                {"attacked", attacked_seed}};
  j["stages"] = nlohmann::json::array({
      {{"stage", "calibration_ensemble"}, {"count", options.calibration_count}, {"seed", calibration_seed}},
      {{"stage", "normalization_tables"}, {"source", "calibration_ensemble"}},
      {{"stage", "threshold"}, {"rate", options.false_alarm_rate}, {"pooled", true}},
      {{"stage", "replay_recordings"}, {"count", options.attacked_count}, {"seed", recording_seed}},
      {{"stage", "attacked_runs"}, {"count", options.attacked_count}, {"seed", attacked_seed}},
      {{"stage", "reports"}},
  });
  return j;
}

ExperimentPlan experiment_protocol(const ScenarioBundle& bundle, const ProtocolOptions& options) {
  const SystemTrajectory& sys = bundle.sys;
  check_dimensions(sys);
  ExperimentPlan plan;
  plan.options = options;
  plan.sys_fingerprint = fingerprint(sys);
  plan.steps = options.steps > 0 ? options.steps : sys.horizon;
  if (plan.steps > sys.horizon) throw std::invalid_argument("protocol steps exceed the system horizon");
  plan.kappa = options.kappa > 0 ? options.kappa : compute_kappa(sys, sys.horizon);
  plan.start_step = seconds_to_steps(options.attack_start_s, sys.dt);
  if (plan.start_step < 0 || plan.start_step >= plan.steps) {
    throw std::invalid_argument("attack start " + std::to_string(options.attack_start_s) + " s lies outside the horizon");
  }
  plan.blend_steps = blend_steps(options.blend_s, sys.dt);
  if (options.window < sys.q() + sys.r()) throw std::invalid_argument("window must be at least q + r");
  if (options.calibration_count == 0) throw std::invalid_argument("calibration count must be positive");
  plan.calibration_seed = derive_seed(options.base_seed, kCalibrationStream);
  plan.recording_seed = derive_seed(options.base_seed, kRecordingStream);
  plan.attacked_seed = derive_seed(options.base_seed, kAttackedStream);
  return plan;
}

}  // namespace ltvwm
