#pragma once

#include <Eigen/Dense>

#include "ltvwm/ltv_model.hpp"

namespace ltvwm::testing {

/// Time-invariant system with every sequence filled with the same matrix.
inline SystemTrajectory constant_system(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, const Eigen::MatrixXd& c,
                                        const Eigen::MatrixXd& k, const Eigen::MatrixXd& l,
                                        const Eigen::MatrixXd& sw, const Eigen::MatrixXd& sz,
                                        const Eigen::MatrixXd& se, Step horizon) {
  SystemTrajectory sys;
  sys.horizon = horizon;
  const auto n = static_cast<std::size_t>(horizon);
  sys.A.assign(n, a);
  sys.B.assign(n, b);
  sys.C.assign(n, c);
  sys.K.assign(n, k);
  sys.L.assign(n, l);
  sys.sigma_w.assign(n, sw);
  sys.sigma_z.assign(n, sz);
  sys.sigma_e = se;
  return sys;
}

inline Eigen::MatrixXd m1(double v) { return Eigen::MatrixXd::Constant(1, 1, v); }

/// Scalar plant x+ = a x + b (k xhat + e) + w, y = c x + z.
inline SystemTrajectory scalar_system(double a, double b, double c, double k, double l, double sw, double sz,
                                      double se, Step horizon) {
  return constant_system(m1(a), m1(b), m1(c), m1(k), m1(l), m1(sw), m1(sz), m1(se), horizon);
}

}  // namespace ltvwm::testing
