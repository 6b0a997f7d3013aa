#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "ltvwm/attacks.hpp"
#include "ltvwm/ltv_model.hpp"
#include "ltvwm/realization.hpp"
#include "ltvwm/rng.hpp"

namespace ltvwm {

struct SimulationOptions {
  bool keep_noise = false;               ///< retain realized w_n, z_n in the Realization
  std::optional<Eigen::VectorXd> x0;     ///< nonzero initial state; zero by default
  std::optional<Eigen::VectorXd> xhat0;  ///< nonzero initial observer state; zero by default
};

struct StepResult {
  Eigen::VectorXd x_next;
  Eigen::VectorXd xhat_next;
  Eigen::VectorXd y;
};

/// e ~ N(0, sigma_e) as chol(sigma_e) * standard normal.
Eigen::VectorXd draw_watermark(Rng& rng, const Eigen::MatrixXd& sigma_e);

/// One step of the plant, measurement and observer.
StepResult step(const SystemTrajectory& sys, Step n, const Eigen::VectorXd& x, const Eigen::VectorXd& xhat,
                const Eigen::VectorXd& e, const Eigen::VectorXd& w, const Eigen::VectorXd& z,
                const Eigen::VectorXd& v);

/// Seed of realization `index` in an ensemble rooted at `base_seed`.
std::uint64_t realization_seed(std::uint64_t base_seed, std::uint64_t index);

/// Precomputed per-step matrices and noise factors for repeated runs on one system.
/// Immutable after construction and safe to share between threads.
class Simulator {
 public:
  Simulator(const SystemTrajectory& sys, Step n_steps);

  Realization run(const std::optional<AttackSpec>& attack, std::uint64_t seed,
                  const SimulationOptions& options = {}) const;

  const SystemTrajectory& system() const { return sys_; }
  Step steps() const { return steps_; }

 private:
  const SystemTrajectory& sys_;
  Step steps_;
  std::vector<Eigen::MatrixXd> bk_;        // B_n K_n
  std::vector<Eigen::MatrixXd> observer_;  // A_n + B_n K_n + L_n C_n
  GaussianSequenceSampler w_;
  GaussianSequenceSampler z_;
  Eigen::MatrixXd e_factor_;
};

Realization run_realization(const SystemTrajectory& sys, const std::optional<AttackSpec>& attack,
                            std::uint64_t seed, Step n_steps, const SimulationOptions& options = {});

struct EnsembleRun {
  std::vector<Realization> realizations;
  std::uint64_t sys_fingerprint = 0;
  std::uint64_t base_seed = 0;
  std::vector<std::uint64_t> seeds;
  bool attacked = false;
};

struct EnsembleOptions {
  std::size_t workers = 0;  ///< 0 = hardware concurrency
  SimulationOptions simulation;
};

/// `count` realizations; realization j uses realization_seed(base_seed, j) regardless of scheduling.
EnsembleRun run_ensemble(const SystemTrajectory& sys, const std::optional<AttackSpec>& attack, std::size_t count,
                         std::uint64_t base_seed, Step n_steps, const EnsembleOptions& options = {});

}  // namespace ltvwm
