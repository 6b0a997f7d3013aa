#pragma once

#include <cstdint>
#include <memory>
#include <optional>

#include <Eigen/Dense>

#include "ltvwm/ltv_model.hpp"
#include "ltvwm/realization.hpp"
#include "ltvwm/rng.hpp"

namespace ltvwm {

enum class AttackMode {
  generalized,  ///< v_n = alpha (C_n x_n + z_n) + C_n xi_n + zeta_n with a false-state process
  replay,       ///< recorded measurements played back, blended in linearly
};

/// Generalized replay attack parameters.
///
/// Covariance sequences may hold a single matrix, which then applies to every step.
/// The attack contributes v_n = 0 for n < start_step.
struct AttackSpec {
  AttackMode mode = AttackMode::generalized;
  double alpha = -1.0;
  MatrixSequence sigma_omega;  ///< p x p false-state process noise
  MatrixSequence sigma_zeta;   ///< r x r false-measurement noise
  std::shared_ptr<const Realization> replay_source;
  Step replay_shift = 0;       ///< recorded step played at step n is n + replay_shift
  Step start_step = 0;
  double blend_duration = 0.0;  ///< seconds
  std::uint64_t seed = 0;
};

/// Throws on inconsistent shapes, non-SPD covariances, or a replay source that does not
/// cover [start_step, n_steps).
void validate_attack(const AttackSpec& spec, const SystemTrajectory& sys, Step n_steps);

/// Number of blend steps ceil(blend_duration / dt); exact multiples are not rounded up.
Step blend_steps(double blend_duration, double dt);

/// xi_{n+1} = Abar_n xi_n + omega_n, omega_n ~ N(0, sigma_omega[n]).
Eigen::VectorXd false_state_step(const AttackSpec& spec, const SystemTrajectory& sys, Step n,
                                 const Eigen::VectorXd& xi, Rng& rng);

/// alpha (C x + z) + C xi + zeta for a given zeta.
Eigen::VectorXd generalized_attack_term(double alpha, const Eigen::MatrixXd& c, const Eigen::VectorXd& x,
                                        const Eigen::VectorXd& z, const Eigen::VectorXd& xi,
                                        const Eigen::VectorXd& zeta);

/// v_n for the generalized model, drawing zeta_n ~ N(0, sigma_zeta[n]).
Eigen::VectorXd attack_value(const AttackSpec& spec, const SystemTrajectory& sys, Step n,
                             const Eigen::VectorXd& x, const Eigen::VectorXd& z, const Eigen::VectorXd& xi,
                             Rng& rng);

/// Measurement after the replay attack at step n >= start_step:
/// (1 - k/m) y_true + (k/m) y_replay for k = n - start_step + 1 <= m, else y_replay.
Eigen::VectorXd replayed_measurement(const AttackSpec& spec, double dt, Step n, const Eigen::VectorXd& y_true);

/// v_n = replayed_measurement - y_true.
Eigen::VectorXd replay_attack_value(const AttackSpec& spec, double dt, Step n, const Eigen::VectorXd& y_true);

/// (1/i) sum_n v_n^T v_n over the columns of v (r x i).
double attack_power(const Eigen::Ref<const Eigen::MatrixXd>& v);

struct AttackedMeasurement {
  Eigen::VectorXd y;  ///< measurement delivered to the observer
  Eigen::VectorXd v;  ///< additive attack term
};

/// Per-realization attack state: the false state, its noise stream and cached samplers.
class AttackProcess {
 public:
  AttackProcess(const AttackSpec& spec, const SystemTrajectory& sys, Step n_steps, std::uint64_t realization_seed);

  bool active(Step n) const { return n >= spec_.start_step; }

  /// Attacked measurement at step n. `x` and `z` are the true state and measurement noise,
  /// `y_true` = C_n x + z. Advances the false state when in generalized mode.
  AttackedMeasurement measure(Step n, const Eigen::VectorXd& x, const Eigen::VectorXd& z, const Eigen::VectorXd& y_true);

  const Eigen::VectorXd& false_state() const { return xi_; }

 private:
  const AttackSpec& spec_;
  const SystemTrajectory& sys_;
  GaussianSequenceSampler omega_;
  GaussianSequenceSampler zeta_;
  Rng rng_;
  Eigen::VectorXd xi_;
};

}  // namespace ltvwm
