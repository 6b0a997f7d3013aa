#include "ltvwm/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ltvwm/errors.hpp"

namespace ltvwm::linalg {

double spectral_norm(const Eigen::MatrixXd& m) {
  if (m.size() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m.transpose() * m, Eigen::EigenvaluesOnly);
  return std::sqrt(std::max(0.0, es.eigenvalues().maxCoeff()));
}

double spectral_radius(const Eigen::MatrixXd& m) {
  if (m.size() == 0) return 0.0;
  if (m.rows() != m.cols()) throw DimensionError("spectral_radius: matrix is not square");
  Eigen::EigenSolver<Eigen::MatrixXd> es(m, false);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

double min_symmetric_eigenvalue(const Eigen::MatrixXd& m) {
  if (m.size() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(symmetrize(m), Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

bool is_symmetric(const Eigen::MatrixXd& m, double rel_tol) {
  if (m.rows() != m.cols()) return false;
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  return (m - m.transpose()).cwiseAbs().maxCoeff() <= rel_tol * scale;
}

Eigen::MatrixXd inverse_sqrt_spd(const Eigen::MatrixXd& m, double floor) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(symmetrize(m));
  if (es.info() != Eigen::Success) throw ConditioningError("inverse_sqrt_spd: eigendecomposition failed");
  const Eigen::VectorXd& lambda = es.eigenvalues();
  if (lambda.minCoeff() < floor) {
    throw ConditioningError("inverse_sqrt_spd: eigenvalue " + std::to_string(lambda.minCoeff()) +
                            " below floor");
  }
  const Eigen::MatrixXd& u = es.eigenvectors();
  return u * lambda.cwiseSqrt().cwiseInverse().asDiagonal() * u.transpose();
}

Eigen::MatrixXd sqrt_psd(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(symmetrize(m));
  const Eigen::VectorXd root = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * root.asDiagonal() * es.eigenvectors().transpose();
}

Eigen::MatrixXd cholesky_lower(const Eigen::MatrixXd& m, const char* what) {
  if (m.rows() != m.cols()) throw DimensionError(std::string(what) + ": covariance is not square");
  if (!is_symmetric(m)) throw NotPositiveDefinite(std::string(what) + ": covariance is not symmetric");
  Eigen::LLT<Eigen::MatrixXd> llt(m);
  if (llt.info() != Eigen::Success) {
    throw NotPositiveDefinite(std::string(what) + ": covariance is not positive definite");
  }
  Eigen::MatrixXd l = llt.matrixL();
  if ((l.diagonal().array() <= 0.0).any()) {
    throw NotPositiveDefinite(std::string(what) + ": covariance is not positive definite");
  }
  return l;
}

Eigen::MatrixXd floor_eigenvalues(const Eigen::MatrixXd& m, double floor) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(symmetrize(m));
  const Eigen::VectorXd lambda = es.eigenvalues().cwiseMax(floor);
  return es.eigenvectors() * lambda.asDiagonal() * es.eigenvectors().transpose();
}

Eigen::MatrixXd solve_dare(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, const Eigen::MatrixXd& q,
                           const Eigen::MatrixXd& r, int max_iterations, double tol) {
  Eigen::MatrixXd p = q;
  for (int it = 0; it < max_iterations; ++it) {
    const Eigen::MatrixXd btp = b.transpose() * p;
    const Eigen::MatrixXd gain = (r + btp * b).ldlt().solve(btp * a);
    Eigen::MatrixXd next = symmetrize(q + a.transpose() * p * a - a.transpose() * p * b * gain);
    if (!next.allFinite()) throw ConditioningError("solve_dare: Riccati iteration diverged");
    const double delta = (next - p).cwiseAbs().maxCoeff();
    p = std::move(next);
    if (delta <= tol * std::max(1.0, p.cwiseAbs().maxCoeff())) return p;
  }
  throw ConditioningError("solve_dare: no convergence");
}

}  // namespace ltvwm::linalg
