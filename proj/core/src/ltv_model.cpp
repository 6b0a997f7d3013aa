#include "ltvwm/ltv_model.hpp"

#include <algorithm>
#include <bit>
#include <cstdio>
#include <limits>
#include <string>

#include "ltvwm/errors.hpp"
#include "ltvwm/linalg.hpp"

namespace ltvwm {
namespace {

void check_sequence(const MatrixSequence& seq, const char* name, Step horizon, Eigen::Index rows,
                    Eigen::Index cols) {
  if (static_cast<Step>(seq.size()) < horizon) {
    throw DimensionError(std::string(name) + ": sequence has " + std::to_string(seq.size()) +
                         " entries, horizon is " + std::to_string(horizon));
  }
  for (std::size_t n = 0; n < seq.size(); ++n) {
    if (seq[n].rows() != rows || seq[n].cols() != cols) {
      throw DimensionError(std::string(name) + "[" + std::to_string(n) + "] is " +
                           std::to_string(seq[n].rows()) + "x" + std::to_string(seq[n].cols()) +
                           ", expected " + std::to_string(rows) + "x" + std::to_string(cols));
    }
  }
}

void check_step(const SystemTrajectory& sys, Step n) {
  if (n < 0 || n >= sys.horizon) {
    throw IndexError("step " + std::to_string(n) + " outside [0, " + std::to_string(sys.horizon) + ")");
  }
}

class Fnv1a {
 public:
  void bytes(const void* data, std::size_t len) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < len; ++i) {
      hash_ ^= p[i];
      hash_ *= 0x100000001b3ULL;
    }
  }
  void i64(std::int64_t v) { bytes(&v, sizeof v); }
  void f64(double v) {
    const auto bits = std::bit_cast<std::uint64_t>(v == 0.0 ? 0.0 : v);
    bytes(&bits, sizeof bits);
  }
  void matrix(const Eigen::MatrixXd& m) {
    i64(m.rows());
    i64(m.cols());
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      for (Eigen::Index j = 0; j < m.cols(); ++j) f64(m(i, j));
  }
  std::uint64_t value() const { return hash_; }

 private:
  std::uint64_t hash_ = 0xcbf29ce484222325ULL;
};

}  // namespace

void check_dimensions(const SystemTrajectory& sys) {
  if (sys.horizon < 1) throw DimensionError("horizon must be >= 1");
  if (!(sys.dt > 0.0)) throw DimensionError("dt must be positive");
  if (sys.A.empty() || sys.C.empty()) throw DimensionError("A and C sequences must be non-empty");
  const Eigen::Index p = sys.p(), q = sys.q(), r = sys.r();
  if (p < 1 || q < 1 || r < 1) throw DimensionError("dimensions p, q, r must be positive");
  if (sys.sigma_e.cols() != q) throw DimensionError("sigma_e must be square");
  check_sequence(sys.A, "A", sys.horizon, p, p);
  check_sequence(sys.B, "B", sys.horizon, p, q);
  check_sequence(sys.C, "C", sys.horizon, r, p);
  check_sequence(sys.K, "K", sys.horizon, q, p);
  check_sequence(sys.L, "L", sys.horizon, p, r);
  check_sequence(sys.sigma_w, "sigma_w", sys.horizon, p, p);
  check_sequence(sys.sigma_z, "sigma_z", sys.horizon, r, r);
}

Eigen::MatrixXd closed_loop_matrix(const SystemTrajectory& sys, Step n) {
  check_step(sys, n);
  return sys.A[n] + sys.B[n] * sys.K[n];
}

Eigen::MatrixXd observer_loop_matrix(const SystemTrajectory& sys, Step n) {
  check_step(sys, n);
  return sys.A[n] + sys.L[n] * sys.C[n];
}

ValidationReport validate_system(const SystemTrajectory& sys, const ValidationOptions& options) {
  check_dimensions(sys);
  const Step steps = options.steps < 0 ? sys.horizon : std::min(options.steps, sys.horizon);
  const bool by_norm = options.measure == StabilityMeasure::spectral_norm;

  ValidationReport report;
  report.min_covariance_eigenvalue = std::numeric_limits<double>::infinity();

  auto covariance_check = [&](const Eigen::MatrixXd& cov, const char* name, Step n) {
    const double lambda = linalg::is_symmetric(cov) ? linalg::min_symmetric_eigenvalue(cov)
                                                    : -std::numeric_limits<double>::infinity();
    report.min_covariance_eigenvalue = std::min(report.min_covariance_eigenvalue, lambda);
    if (!(lambda > 0.0)) {
      report.violations.push_back({"1", n, lambda, std::string(name) + " is not positive definite"});
    }
  };

  covariance_check(sys.sigma_e, "sigma_e", 0);
  for (Step n = 0; n < steps; ++n) {
    const Eigen::MatrixXd abar = sys.A[n] + sys.B[n] * sys.K[n];
    const Eigen::MatrixXd aund = sys.A[n] + sys.L[n] * sys.C[n];
    const double norm_bar = linalg::spectral_norm(abar);
    const double norm_und = linalg::spectral_norm(aund);
    const double rad_bar = linalg::spectral_radius(abar);
    const double rad_und = linalg::spectral_radius(aund);
    report.max_norm_Abar = std::max(report.max_norm_Abar, norm_bar);
    report.max_norm_Aunderline = std::max(report.max_norm_Aunderline, norm_und);
    report.max_radius_Abar = std::max(report.max_radius_Abar, rad_bar);
    report.max_radius_Aunderline = std::max(report.max_radius_Aunderline, rad_und);

    const double bar = by_norm ? norm_bar : rad_bar;
    const double und = by_norm ? norm_und : rad_und;
    if (!(bar < 1.0)) report.violations.push_back({"1", n, bar, "closed loop A+BK is not contracting"});
    if (!(und < 1.0)) report.violations.push_back({"3", n, und, "observer loop A+LC is not contracting"});
    covariance_check(sys.sigma_w[n], "sigma_w", n);
    covariance_check(sys.sigma_z[n], "sigma_z", n);
  }
  return report;
}

Eigen::MatrixXd kappa_average(const SystemTrajectory& sys, Step horizon, int kappa) {
  check_dimensions(sys);
  if (kappa < 1) throw std::invalid_argument("kappa must be >= 1");
  if (horizon < 1 || horizon > sys.horizon) throw IndexError("kappa_average: horizon outside system horizon");
  Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(sys.r(), sys.q());
  for (Step n = kappa; n < horizon; ++n) {
    // Abar_{(n-1, n-kappa+1)} B_{n-kappa}, built right to left
    Eigen::MatrixXd chain = sys.B[n - kappa];
    for (Step m = n - kappa + 1; m <= n - 1; ++m) chain = (sys.A[m] + sys.B[m] * sys.K[m]) * chain;
    sum += sys.C[n] * chain;
  }
  return sum / static_cast<double>(horizon);
}

int compute_kappa(const SystemTrajectory& sys, Step horizon, double tol, int kappa_max) {
  check_dimensions(sys);
  if (!(tol > 0.0)) throw std::invalid_argument("compute_kappa: tol must be positive");
  const int cap = kappa_max > 0 ? kappa_max : static_cast<int>(sys.p());
  if (horizon < 10 * static_cast<Step>(cap)) {
    throw std::invalid_argument("compute_kappa: horizon must be at least 10 * kappa_max");
  }
  for (int kappa = 1; kappa <= cap; ++kappa) {
    if (linalg::spectral_norm(kappa_average(sys, horizon, kappa)) > tol) return kappa;
  }
  throw WatermarkUnobservable("watermark unobservable: no kappa <= " + std::to_string(cap) +
                              " gives a persistent input-to-output correlation");
}

std::uint64_t fingerprint(const SystemTrajectory& sys) {
  Fnv1a h;
  h.i64(sys.horizon);
  h.f64(sys.dt);
  for (const MatrixSequence* seq : {&sys.A, &sys.B, &sys.C, &sys.K, &sys.L, &sys.sigma_w, &sys.sigma_z}) {
    const Step len = std::min<Step>(static_cast<Step>(seq->size()), sys.horizon);
    h.i64(len);
    for (Step n = 0; n < len; ++n) h.matrix((*seq)[n]);
  }
  h.matrix(sys.sigma_e);
  return h.value();
}

std::string fingerprint_hex(std::uint64_t fp) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fp));
  return buf;
}

}  // namespace ltvwm
