#include "ltvwm/attacks.hpp"

#include <cmath>
#include <string>

#include "ltvwm/errors.hpp"
#include "ltvwm/linalg.hpp"

namespace ltvwm {
namespace {

const Eigen::MatrixXd& covariance_at(const MatrixSequence& seq, Step n) {
  return seq.size() == 1 ? seq.front() : seq[static_cast<std::size_t>(n)];
}

MatrixSequence expand(const MatrixSequence& seq, Step steps) {
  if (seq.size() != 1) return seq;
  return MatrixSequence(static_cast<std::size_t>(std::max<Step>(steps, 1)), seq.front());
}

void check_covariances(const MatrixSequence& seq, const char* name, Step n_steps, Eigen::Index dim) {
  if (seq.empty()) throw DimensionError(std::string(name) + ": covariance sequence is empty");
  if (seq.size() != 1 && static_cast<Step>(seq.size()) < n_steps) {
    throw DimensionError(std::string(name) + ": covariance sequence shorter than the run");
  }
  for (const auto& cov : seq) {
    if (cov.rows() != dim || cov.cols() != dim) {
      throw DimensionError(std::string(name) + ": expected " + std::to_string(dim) + "x" + std::to_string(dim));
    }
    linalg::cholesky_lower(cov, name);
  }
}

Step replay_index(const AttackSpec& spec, Step n) {
  const Step idx = n + spec.replay_shift;
  if (!spec.replay_source || idx < 0 || idx >= spec.replay_source->steps()) {
    throw ReplayExhausted("replay source has no measurement for step " + std::to_string(n));
  }
  return idx;
}

}  // namespace

void validate_attack(const AttackSpec& spec, const SystemTrajectory& sys, Step n_steps) {
  if (spec.start_step < 0) throw std::invalid_argument("attack start_step must be >= 0");
  if (!std::isfinite(spec.alpha)) throw std::invalid_argument("attack alpha must be finite");
  if (spec.blend_duration < 0.0) throw std::invalid_argument("blend_duration must be >= 0");
  if (spec.mode == AttackMode::generalized) {
    check_covariances(spec.sigma_omega, "sigma_omega", n_steps, sys.p());
    check_covariances(spec.sigma_zeta, "sigma_zeta", n_steps, sys.r());
    return;
  }
  if (!spec.replay_source) throw std::invalid_argument("replay attack requires a replay source");
  if (spec.replay_source->r() != sys.r()) throw DimensionError("replay source measurement dimension differs");
  if (spec.start_step < n_steps) {
    replay_index(spec, spec.start_step);
    replay_index(spec, n_steps - 1);
  }
}

Step blend_steps(double blend_duration, double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("dt must be positive");
  if (blend_duration <= 0.0) return 0;
  return static_cast<Step>(std::ceil(blend_duration / dt - 1e-9));
}

Eigen::VectorXd false_state_step(const AttackSpec& spec, const SystemTrajectory& sys, Step n,
                                 const Eigen::VectorXd& xi, Rng& rng) {
  if (xi.size() != sys.p()) throw DimensionError("false_state_step: xi has wrong dimension");
  const Eigen::MatrixXd l = linalg::cholesky_lower(covariance_at(spec.sigma_omega, n), "sigma_omega");
  return closed_loop_matrix(sys, n) * xi + l * rng.standard_normal(l.cols());
}

Eigen::VectorXd generalized_attack_term(double alpha, const Eigen::MatrixXd& c, const Eigen::VectorXd& x,
                                        const Eigen::VectorXd& z, const Eigen::VectorXd& xi,
                                        const Eigen::VectorXd& zeta) {
  if (x.size() != c.cols() || xi.size() != c.cols() || z.size() != c.rows() || zeta.size() != c.rows()) {
    throw DimensionError("attack term: vector dimensions disagree with C");
  }
  return alpha * (c * x + z) + c * xi + zeta;
}

Eigen::VectorXd attack_value(const AttackSpec& spec, const SystemTrajectory& sys, Step n,
                             const Eigen::VectorXd& x, const Eigen::VectorXd& z, const Eigen::VectorXd& xi,
                             Rng& rng) {
  if (n < 0 || n >= sys.horizon) throw IndexError("attack_value: step outside horizon");
  const Eigen::MatrixXd l = linalg::cholesky_lower(covariance_at(spec.sigma_zeta, n), "sigma_zeta");
  const Eigen::VectorXd zeta = l * rng.standard_normal(l.cols());
  return generalized_attack_term(spec.alpha, sys.C[n], x, z, xi, zeta);
}

Eigen::VectorXd replayed_measurement(const AttackSpec& spec, double dt, Step n, const Eigen::VectorXd& y_true) {
  if (n < spec.start_step) throw std::invalid_argument("replay attack evaluated before start_step");
  const Eigen::VectorXd y_replay = spec.replay_source->y.col(replay_index(spec, n));
  if (y_replay.size() != y_true.size()) throw DimensionError("replayed measurement dimension differs");
  const Step m = blend_steps(spec.blend_duration, dt);
  const Step k = n - spec.start_step + 1;
  if (k >= m) return y_replay;
  const double weight = static_cast<double>(k) / static_cast<double>(m);
  return (1.0 - weight) * y_true + weight * y_replay;
}

Eigen::VectorXd replay_attack_value(const AttackSpec& spec, double dt, Step n, const Eigen::VectorXd& y_true) {
  return replayed_measurement(spec, dt, n, y_true) - y_true;
}

double attack_power(const Eigen::Ref<const Eigen::MatrixXd>& v) {
  if (v.cols() == 0) throw std::invalid_argument("attack_power: empty sequence");
  return v.colwise().squaredNorm().sum() / static_cast<double>(v.cols());
}

AttackProcess::AttackProcess(const AttackSpec& spec, const SystemTrajectory& sys, Step n_steps,
                             std::uint64_t realization_seed)
    : spec_(spec),
      sys_(sys),
      rng_(derive_seed(spec.seed, realization_seed), Stream::attack),
      xi_(Eigen::VectorXd::Zero(sys.p())) {
  validate_attack(spec, sys, n_steps);
  if (spec.mode == AttackMode::generalized) {
    omega_ = GaussianSequenceSampler(expand(spec.sigma_omega, n_steps), n_steps, "sigma_omega");
    zeta_ = GaussianSequenceSampler(expand(spec.sigma_zeta, n_steps), n_steps, "sigma_zeta");
  }
}

AttackedMeasurement AttackProcess::measure(Step n, const Eigen::VectorXd& x, const Eigen::VectorXd& z,
                                           const Eigen::VectorXd& y_true) {
  if (spec_.mode == AttackMode::replay) {
    Eigen::VectorXd y = replayed_measurement(spec_, sys_.dt, n, y_true);
    Eigen::VectorXd v = y - y_true;
    return {std::move(y), std::move(v)};
  }
  const Eigen::VectorXd zeta = zeta_.draw(n, rng_);
  const Eigen::VectorXd v = generalized_attack_term(spec_.alpha, sys_.C[n], x, z, xi_, zeta);
  const Eigen::VectorXd omega = omega_.draw(n, rng_);
  xi_ = (sys_.A[n] + sys_.B[n] * sys_.K[n]) * xi_ + omega;
  return {y_true + v, v};
}

}  // namespace ltvwm
