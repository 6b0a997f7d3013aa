#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "ltvwm/ltv_model.hpp"
#include "ltvwm/normalization.hpp"
#include "ltvwm/realization.hpp"

namespace ltvwm {

/// Q_n regularization added before log det when Q_n has a numerically zero eigenvalue.
inline constexpr double kQRegularization = 1e-12;

struct DetectorConfig {
  Step window = 20;  ///< ell + 1
  int kappa = 1;
  double threshold = std::numeric_limits<double>::infinity();
  bool use_G = true;
  double false_alarm_rate = 0.002;

  Step ell() const { return window - 1; }
  Step first_valid_step() const { return window - 1 + kappa; }
};

/// Throws std::invalid_argument unless window >= q + r, kappa >= 1 and 0 < rate < 1.
void validate_config(const DetectorConfig& config, Eigen::Index q, Eigen::Index r);

struct DetectionReport {
  std::vector<double> nll;  ///< NaN before first_valid_step
  std::vector<std::uint8_t> alarms;
  std::optional<Step> first_alarm_step;
  MatrixSequence c1_running;  ///< r x q running mean of rho_n e_{n-kappa}^T
  MatrixSequence c2_running;  ///< r x r running mean of rho_n rho_n^T
  Step first_valid_step = 0;
  double threshold = std::numeric_limits<double>::infinity();
  std::size_t regularized_steps = 0;

  Step steps() const { return static_cast<Step>(nll.size()); }
  /// Fraction of valid steps in [from, to) that raised an alarm.
  double alarm_fraction(Step from, Step to) const;
  std::size_t alarm_count(Step from, Step to) const;
};

/// V_n (C_n xhat_n - y_n)
Eigen::VectorXd residual(const Eigen::MatrixXd& V, const Eigen::MatrixXd& C, const Eigen::VectorXd& xhat,
                         const Eigen::VectorXd& y);

/// [residual; watermark_delayed]
Eigen::VectorXd build_psi(const Eigen::VectorXd& residual, const Eigen::VectorXd& watermark_delayed);

/// psi_n for n = 0..steps-1 as columns; the watermark rows are zero where n < kappa.
Eigen::MatrixXd psi_matrix(const Realization& rz, const SystemTrajectory& sys, const MatrixSequence& V, int kappa,
                           Step steps);

/// P_n = [psi_{n-ell} ... psi_n]; throws IndexError when the window reaches before step kappa.
Eigen::MatrixXd window_psi(const Realization& rz, const SystemTrajectory& sys, const MatrixSequence& V, int kappa,
                           Step n, Step window);

/// Q_n = P P^T (G = I).
Eigen::MatrixXd window_statistic(const Eigen::MatrixXd& P);

/// Q_n = P G^{-1} P^T with G SPD.
Eigen::MatrixXd window_statistic(const Eigen::MatrixXd& P, const Eigen::MatrixXd& G);

/// Q_n = P G^{-1} P^T given the lower Cholesky factor of G.
Eigen::MatrixXd window_statistic_factored(const Eigen::MatrixXd& P, const Eigen::MatrixXd& G_lower);

/// (q + r - ell) log det Q + tr(S^{-1} Q). Sets *regularized when the 1e-12 I guard was needed.
double negative_log_likelihood(const Eigen::MatrixXd& Q, const Eigen::MatrixXd& S, Step ell, Eigen::Index q,
                               Eigen::Index r, bool* regularized = nullptr);

/// Same, with S^{-1} supplied by the caller.
double negative_log_likelihood_inv(const Eigen::MatrixXd& Q, const Eigen::MatrixXd& S_inv, Step ell,
                                   Eigen::Index q, Eigen::Index r, bool* regularized = nullptr);

/// Linear-interpolation quantile of order statistics (h = (N - 1) prob, zero-based).
double empirical_quantile(std::vector<double> samples, double prob);

/// Empirical (1 - rate) quantile of pooled NLL samples; requires at least 10 / rate samples.
double calibrate_threshold(std::span<const double> nll_samples, double false_alarm_rate);

/// Finite NLL values of every report, pooled.
std::vector<double> pooled_nll(const std::vector<DetectionReport>& reports);

DetectionReport detect(const Realization& rz, const SystemTrajectory& sys, const NormalizationTables& tables,
                       const DetectorConfig& config);

std::vector<DetectionReport> detect_all(const std::vector<Realization>& realizations, const SystemTrajectory& sys,
                                        const NormalizationTables& tables, const DetectorConfig& config,
                                        std::size_t workers = 0);

struct AsymptoticStatistics {
  Eigen::MatrixXd c1;  ///< r x q
  Eigen::MatrixXd c2;  ///< r x r
  Step samples = 0;
};

/// Sample means over n = 0..up_to-1 of rho_n e_{n-kappa}^T and rho_n rho_n^T, rho_n = V_n (C_n xhat_n - y_n).
/// Watermark terms before step kappa count as zero.
AsymptoticStatistics asymptotic_statistics(const Realization& rz, const SystemTrajectory& sys,
                                           const NormalizationTables& tables, int kappa, Step up_to);

/// The earlier single-delay test: psi_n = [rho_n; e_{n-1}], Q_n = sum of psi psi^T over the window,
/// no auto-correlation normalization. Kept independent of detect() to check the reduction claim.
/// Q_n of the single-delay test for the window ending at n.
Eigen::MatrixXd baseline_window_statistic(const Realization& rz, const SystemTrajectory& sys, const MatrixSequence& V,
                                          Step n, Step window);

DetectionReport detect_baseline(const Realization& rz, const SystemTrajectory& sys, const MatrixSequence& V,
                                Step window, double threshold);

}  // namespace ltvwm
