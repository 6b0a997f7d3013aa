#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "ltvwm/ltv_model.hpp"

namespace ltvwm {

/// One simulated closed-loop run. Signals are stored column-per-step.
struct Realization {
  Eigen::MatrixXd x;     ///< p x (steps+1) true state, x_0 = 0 unless overridden
  Eigen::MatrixXd xhat;  ///< p x (steps+1) observer state
  Eigen::MatrixXd y;     ///< r x steps measurement as received (after the attack)
  Eigen::MatrixXd e;     ///< q x steps watermark
  Eigen::MatrixXd u;     ///< q x steps total input K_n xhat_n + e_n
  Eigen::MatrixXd v;     ///< r x steps additive attack term (zero when unattacked)
  std::vector<std::uint8_t> attack_active;  ///< per step, 0 or 1
  std::uint64_t seed = 0;

  // Realized noises; filled only when SimulationOptions::keep_noise is set.
  Eigen::MatrixXd w;  ///< p x steps
  Eigen::MatrixXd z;  ///< r x steps

  Step steps() const { return y.cols(); }
  Eigen::Index p() const { return x.rows(); }
  Eigen::Index q() const { return e.rows(); }
  Eigen::Index r() const { return y.rows(); }
};

}  // namespace ltvwm
