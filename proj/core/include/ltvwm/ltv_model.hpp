#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace ltvwm {

using Step = Eigen::Index;
using MatrixSequence = std::vector<Eigen::MatrixXd>;

/**
 * Time-indexed description of a watermarked LTV plant, controller and observer:
 *
 *   x_{n+1}  = A_n x_n + B_n K_n xhat_n + B_n e_n + w_n
 *   y_n      = C_n x_n + z_n + v_n
 *   xhat_{n+1} = (A_n + B_n K_n + L_n C_n) xhat_n + B_n e_n - L_n y_n
 *
 * with w_n ~ N(0, sigma_w[n]), z_n ~ N(0, sigma_z[n]) and watermark e_n ~ N(0, sigma_e).
 * Every sequence holds one dense matrix per step and must cover at least `horizon` steps.
 */
struct SystemTrajectory {
  Step horizon = 0;
  double dt = 1.0;  ///< seconds per step
  MatrixSequence A;        ///< p x p
  MatrixSequence B;        ///< p x q
  MatrixSequence C;        ///< r x p
  MatrixSequence K;        ///< q x p feedback gain on the observed state
  MatrixSequence L;        ///< p x r observer gain
  MatrixSequence sigma_w;  ///< p x p
  MatrixSequence sigma_z;  ///< r x r
  Eigen::MatrixXd sigma_e; ///< q x q watermark covariance

  Eigen::Index p() const { return A.empty() ? 0 : A.front().rows(); }
  Eigen::Index q() const { return sigma_e.rows(); }
  Eigen::Index r() const { return C.empty() ? 0 : C.front().rows(); }
};

/// Which matrix measure the stability bounds are checked against.
enum class StabilityMeasure {
  spectral_radius,  ///< max |eig(M)| < 1 (default)
  spectral_norm,    ///< ||M||_2 < 1, the strict uniform-contraction reading
};

struct Violation {
  std::string assumption;  ///< "1" (plant/noise bounds) or "3" (observer bounds)
  Step step = 0;
  double value = 0.0;
  std::string what;
};

struct ValidationReport {
  double max_norm_Abar = 0.0;
  double max_norm_Aunderline = 0.0;
  double max_radius_Abar = 0.0;
  double max_radius_Aunderline = 0.0;
  double min_covariance_eigenvalue = 0.0;
  std::vector<Violation> violations;

  bool ok() const { return violations.empty(); }
};

struct ValidationOptions {
  StabilityMeasure measure = StabilityMeasure::spectral_radius;
  Step steps = -1;  ///< number of steps to check; -1 means the full horizon
};

/// Throws DimensionError unless every sequence covers the horizon with consistent shapes.
void check_dimensions(const SystemTrajectory& sys);

/// Abar_n = A_n + B_n K_n
Eigen::MatrixXd closed_loop_matrix(const SystemTrajectory& sys, Step n);

/// Aunderline_n = A_n + L_n C_n
Eigen::MatrixXd observer_loop_matrix(const SystemTrajectory& sys, Step n);

ValidationReport validate_system(const SystemTrajectory& sys, const ValidationOptions& options = {});

/// (1/horizon) * sum_{n=kappa}^{horizon-1} C_n Abar_{(n-1, n-kappa+1)} B_{n-kappa},
/// where the ordered product Abar_{(n-1,n)} is the identity.
Eigen::MatrixXd kappa_average(const SystemTrajectory& sys, Step horizon, int kappa);

/// Smallest kappa in [1, kappa_max] whose delayed input-to-output average has 2-norm above `tol`.
/// kappa_max <= 0 selects p. Throws WatermarkUnobservable if none qualifies.
int compute_kappa(const SystemTrajectory& sys, Step horizon, double tol = 1e-6, int kappa_max = 0);

/// Stable 64-bit content hash of the system (dimensions, horizon, dt and every matrix entry).
std::uint64_t fingerprint(const SystemTrajectory& sys);

std::string fingerprint_hex(std::uint64_t fp);

}  // namespace ltvwm
