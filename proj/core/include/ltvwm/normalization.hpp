#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ltvwm/ltv_model.hpp"
#include "ltvwm/simulate.hpp"

namespace ltvwm {

enum class Provenance { analytic, ensemble };

/// Eigenvalue floor applied to ensemble G_n estimates before inversion.
inline constexpr double kGEigenFloor = 1e-8;

/**
 * Per-step whitening matrices V_n, observer-error covariances Sigma_delta_n, and the
 * auto-correlation normalizing factors G_n for every admissible window end n.
 *
 * G is indexed by window end: G[n - first_window_end()] covers steps n-ell .. n.
 * The lower Cholesky factor of each G_n is kept next to it for the detector.
 */
struct NormalizationTables {
  MatrixSequence V;
  MatrixSequence sigma_delta;
  MatrixSequence G;
  MatrixSequence G_lower;
  Step window = 0;  ///< ell + 1
  int kappa = 1;
  Provenance provenance = Provenance::analytic;
  std::size_t ensemble_count = 0;
  std::uint64_t sys_fingerprint = 0;
  std::vector<std::string> warnings;

  Step steps() const { return static_cast<Step>(V.size()); }
  Step first_window_end() const { return window - 1 + kappa; }
  bool has_G() const { return !G.empty(); }
  const Eigen::MatrixXd& G_at(Step n) const;
  const Eigen::MatrixXd& G_lower_at(Step n) const;
};

/// Sigma_delta_n for n = 0..up_to by the forward recursion
/// Sigma_{n+1} = Aund_n Sigma_n Aund_n^T + Sigma_w_n + L_n Sigma_z_n L_n^T, Sigma_0 = 0.
MatrixSequence sigma_delta(const SystemTrajectory& sys, Step up_to);

/// V_n = (C_n Sigma_delta_n C_n^T + Sigma_z_n)^{-1/2}, principal root.
Eigen::MatrixXd matrix_normalizer(const SystemTrajectory& sys, const Eigen::MatrixXd& sigma_delta_n, Step n);

/// Inverse principal square root of the ensemble covariance of C_n xhat_n - y_n.
Eigen::MatrixXd vn_ensemble(const EnsembleRun& ensemble, const SystemTrajectory& sys, Step n);

/// Expected lag products E[psi_{j+i}^T psi_j] / tr(S) for i = 1..max_lag, from the model.
Eigen::VectorXd lag_correlations(const SystemTrajectory& sys, const NormalizationTables& tables, Step j, Step max_lag);

/// Model-based G_n for the window ending at n; requires n >= window - 1 + kappa.
Eigen::MatrixXd gn_analytic(const SystemTrajectory& sys, const NormalizationTables& tables, Step n, Step window,
                            int kappa);

/// Ensemble estimate of G_n: mean of P^T P / tr(S), symmetrized, unit diagonal, eigenvalues floored.
/// Appends to `warnings` when the ensemble is smaller than the window.
Eigen::MatrixXd gn_ensemble(const EnsembleRun& ensemble, const SystemTrajectory& sys,
                            const NormalizationTables& tables, Step n, Step window, int kappa,
                            std::vector<std::string>* warnings = nullptr);

struct TableOptions {
  Step window = 20;
  int kappa = 1;
  bool with_G = true;
  std::size_t workers = 0;
};

NormalizationTables build_analytic_tables(const SystemTrajectory& sys, Step steps, const TableOptions& options);

/// Tables estimated from an unattacked ensemble. Sigma_delta is the sample covariance of xhat - x.
NormalizationTables build_ensemble_tables(const SystemTrajectory& sys, const EnsembleRun& ensemble,
                                          const TableOptions& options);

/// Fills G_lower from G; throws NotPositiveDefinite for a non-SPD G_n.
void factor_G(NormalizationTables& tables);

/// Replaces every G_n with the identity (the unnormalized test).
void set_identity_G(NormalizationTables& tables);

/// S = blkdiag(I_r, Sigma_e)
Eigen::MatrixXd statistic_scale(const Eigen::MatrixXd& sigma_e, Eigen::Index r);

}  // namespace ltvwm
