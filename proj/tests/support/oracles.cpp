#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace ltvwm::testing {

Eigen::MatrixXd sigma_delta_direct(const SystemTrajectory& sys, Step n) {
  const Eigen::Index p = sys.p();
  Eigen::MatrixXd total = Eigen::MatrixXd::Zero(p, p);
  for (Step i = 1; i <= n; ++i) {
    const Step m = n - i;
    // transition from step m+1 to step n: Aund_{n-1} ... Aund_{m+1}
    Eigen::MatrixXd phi = Eigen::MatrixXd::Identity(p, p);
    for (Step k = m + 1; k <= n - 1; ++k) phi = (sys.A[k] + sys.L[k] * sys.C[k]) * phi;
    const Eigen::MatrixXd drive = sys.sigma_w[m] + sys.L[m] * sys.sigma_z[m] * sys.L[m].transpose();
    total += phi * drive * phi.transpose();
  }
  return total;
}

namespace {

Eigen::MatrixXd random_matrix(std::mt19937_64& gen, Eigen::Index rows, Eigen::Index cols, double scale) {
  std::normal_distribution<double> nd(0.0, scale);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = nd(gen);
  return m;
}

Eigen::MatrixXd random_spd(std::mt19937_64& gen, Eigen::Index n, double scale) {
  const Eigen::MatrixXd g = random_matrix(gen, n, n, 1.0);
  return scale * (g * g.transpose() / static_cast<double>(n) + 0.5 * Eigen::MatrixXd::Identity(n, n));
}

double radius(const Eigen::MatrixXd& m) { return m.eigenvalues().cwiseAbs().maxCoeff(); }

}  // namespace

SystemTrajectory random_stable_system(int p, int q, int r, Step horizon, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  SystemTrajectory sys;
  sys.horizon = horizon;
  sys.sigma_e = random_spd(gen, q, 0.1);
  const Eigen::MatrixXd a0 = random_matrix(gen, p, p, 0.6 / std::sqrt(static_cast<double>(p)));
  const Eigen::MatrixXd drift = random_matrix(gen, p, p, 0.2 / std::sqrt(static_cast<double>(p)));
  const Eigen::MatrixXd b = random_matrix(gen, p, q, 1.0);
  const Eigen::MatrixXd c = random_matrix(gen, r, p, 1.0);
  for (Step n = 0; n < horizon; ++n) {
    Eigen::MatrixXd a = a0 + std::sin(0.3 * static_cast<double>(n)) * drift;
    Eigen::MatrixXd k = random_matrix(gen, q, p, 0.05);
    Eigen::MatrixXd l = random_matrix(gen, p, r, 0.05);
    // shrink until both loops contract
    for (int tries = 0; radius(a + b * k) >= 0.9 || radius(a + l * c) >= 0.9; ++tries) {
      a *= 0.8;
      k *= 0.5;
      l *= 0.5;
    }
    sys.A.push_back(a);
    sys.B.push_back(b);
    sys.C.push_back(c);
    sys.K.push_back(k);
    sys.L.push_back(l);
    sys.sigma_w.push_back(random_spd(gen, p, 0.01));
    sys.sigma_z.push_back(random_spd(gen, r, 0.01));
  }
  return sys;
}

Eigen::MatrixXd inverse_sqrt_db(const Eigen::MatrixXd& m) {
  Eigen::MatrixXd y = m;
  Eigen::MatrixXd z = Eigen::MatrixXd::Identity(m.rows(), m.cols());
  for (int it = 0; it < 100; ++it) {
    const Eigen::MatrixXd yi = y.inverse();
    const Eigen::MatrixXd zi = z.inverse();
    y = 0.5 * (y + zi);
    z = 0.5 * (z + yi);
  }
  return z;  // z -> m^{-1/2}
}

double lag_product_bruteforce(const SystemTrajectory& sys, const std::vector<Eigen::MatrixXd>& V, Step j, Step i) {
  // delta = xhat - x obeys delta_{k+1} = Aund_k delta_k - L_k z_k - w_k, and rho_k = V_k (C_k delta_k - z_k).
  const Eigen::Index p = sys.p();
  Eigen::MatrixXd sd = Eigen::MatrixXd::Zero(p, p);
  for (Step k = 0; k < j; ++k) {
    const Eigen::MatrixXd au = sys.A[k] + sys.L[k] * sys.C[k];
    sd = au * sd * au.transpose() + sys.sigma_w[k] + sys.L[k] * sys.sigma_z[k] * sys.L[k].transpose();
  }
  Eigen::MatrixXd phi = Eigen::MatrixXd::Identity(p, p);  // Aund_(j+i-1, j+1)
  for (Step k = j + 1; k <= j + i - 1; ++k) phi = (sys.A[k] + sys.L[k] * sys.C[k]) * phi;
  const Eigen::MatrixXd aund_j = sys.A[j] + sys.L[j] * sys.C[j];
  const Eigen::MatrixXd cross_delta = phi * aund_j * sd;                 // E[delta_{j+i} delta_j^T]
  const Eigen::MatrixXd cross_z = -(phi * sys.L[j] * sys.sigma_z[j]);    // E[delta_{j+i} z_j^T]
  const Eigen::MatrixXd cov = V[j + i] * sys.C[j + i] * (cross_delta * sys.C[j].transpose() - cross_z) * V[j].transpose();
  return cov.trace();
}

double quantile_type7(std::vector<double> xs, double p) {
  std::sort(xs.begin(), xs.end());
  const double h = (static_cast<double>(xs.size()) - 1.0) * p + 1.0;  // one-based
  const auto lo = static_cast<std::size_t>(std::floor(h));
  if (lo >= xs.size()) return xs.back();
  return xs[lo - 1] + (h - static_cast<double>(lo)) * (xs[lo] - xs[lo - 1]);
}

}  // namespace ltvwm::testing
