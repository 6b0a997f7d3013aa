#pragma once

#include <Eigen/Dense>

namespace ltvwm::linalg {

/// Eigenvalues below this are treated as zero by the inverse square root.
inline constexpr double kEigenFloor = 1e-12;

/// Largest singular value, from the symmetric eigendecomposition of M^T M.
double spectral_norm(const Eigen::MatrixXd& m);

/// Largest eigenvalue modulus of a square matrix.
double spectral_radius(const Eigen::MatrixXd& m);

/// Smallest eigenvalue of the symmetric part of m.
double min_symmetric_eigenvalue(const Eigen::MatrixXd& m);

bool is_symmetric(const Eigen::MatrixXd& m, double rel_tol = 1e-10);

inline Eigen::MatrixXd symmetrize(const Eigen::MatrixXd& m) { return 0.5 * (m + m.transpose()); }

/// Principal inverse square root M^{-1/2} of a symmetric positive definite matrix.
/// Throws ConditioningError if an eigenvalue is below `floor`.
Eigen::MatrixXd inverse_sqrt_spd(const Eigen::MatrixXd& m, double floor = kEigenFloor);

/// Principal square root of a symmetric positive semidefinite matrix.
Eigen::MatrixXd sqrt_psd(const Eigen::MatrixXd& m);

/// Lower Cholesky factor; throws NotPositiveDefinite when m is not SPD.
Eigen::MatrixXd cholesky_lower(const Eigen::MatrixXd& m, const char* what = "matrix");

/// Clamp eigenvalues of a symmetric matrix from below.
Eigen::MatrixXd floor_eigenvalues(const Eigen::MatrixXd& m, double floor);

/// Stabilizing solution of the discrete algebraic Riccati equation
///   P = A^T P A - A^T P B (R + B^T P B)^{-1} B^T P A + Q
/// by fixed-point iteration of the Riccati difference equation.
Eigen::MatrixXd solve_dare(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                           const Eigen::MatrixXd& q, const Eigen::MatrixXd& r,
                           int max_iterations = 100000, double tol = 1e-12);

}  // namespace ltvwm::linalg
