#include "ltvwm/detector.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "ltvwm/errors.hpp"
#include "ltvwm/parallel.hpp"

namespace ltvwm {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void check_tables(const NormalizationTables& tables, const SystemTrajectory& sys, const DetectorConfig& config,
                  Step steps) {
  if (tables.sys_fingerprint != 0 && tables.sys_fingerprint != fingerprint(sys)) {
    throw FingerprintMismatch("normalization tables were built for a different system");
  }
  if (tables.steps() < steps) {
    throw IndexError("tables cover " + std::to_string(tables.steps()) + " steps, realization has " +
                     std::to_string(steps));
  }
  if (config.use_G) {
    if (tables.window != config.window || tables.kappa != config.kappa) {
      throw std::invalid_argument("tables were built for window " + std::to_string(tables.window) + ", kappa " +
                                  std::to_string(tables.kappa));
    }
    if (!tables.has_G() || tables.G_lower.size() != tables.G.size()) {
      throw std::invalid_argument("use_G requested but the tables hold no factored G_n");
    }
  }
}

double log_det_spd(const Eigen::MatrixXd& Q, bool* regularized) {
  Eigen::LLT<Eigen::MatrixXd> llt(Q);
  bool reg = false;
  if (llt.info() != Eigen::Success || llt.matrixLLT().diagonal().minCoeff() <= 0.0) {
    llt.compute(Q + kQRegularization * Eigen::MatrixXd::Identity(Q.rows(), Q.cols()));
    reg = true;
    if (llt.info() != Eigen::Success) throw NotPositiveDefinite("Q_n is not positive definite after regularization");
  }
  if (regularized) *regularized = reg;
  return 2.0 * llt.matrixLLT().diagonal().array().log().sum();
}

}  // namespace

void validate_config(const DetectorConfig& config, Eigen::Index q, Eigen::Index r) {
  if (config.window < q + r) {
    throw std::invalid_argument("window must be at least q + r = " + std::to_string(q + r));
  }
  if (config.kappa < 1) throw std::invalid_argument("kappa must be >= 1");
  if (!(config.false_alarm_rate > 0.0 && config.false_alarm_rate < 1.0)) {
    throw std::invalid_argument("false_alarm_rate must lie in (0, 1)");
  }
}

double DetectionReport::alarm_fraction(Step from, Step to) const {
  from = std::max(from, first_valid_step);
  to = std::min(to, steps());
  if (to <= from) return 0.0;
  return static_cast<double>(alarm_count(from, to)) / static_cast<double>(to - from);
}

std::size_t DetectionReport::alarm_count(Step from, Step to) const {
  from = std::max<Step>(from, 0);
  to = std::min(to, steps());
  std::size_t count = 0;
  for (Step n = from; n < to; ++n) count += alarms[static_cast<std::size_t>(n)];
  return count;
}

Eigen::VectorXd residual(const Eigen::MatrixXd& V, const Eigen::MatrixXd& C, const Eigen::VectorXd& xhat,
                         const Eigen::VectorXd& y) {
  if (C.cols() != xhat.size() || C.rows() != y.size() || V.cols() != y.size()) {
    throw DimensionError("residual: inconsistent dimensions");
  }
  return V * (C * xhat - y);
}

Eigen::VectorXd build_psi(const Eigen::VectorXd& residual, const Eigen::VectorXd& watermark_delayed) {
  Eigen::VectorXd psi(residual.size() + watermark_delayed.size());
  psi << residual, watermark_delayed;
  return psi;
}

Eigen::MatrixXd psi_matrix(const Realization& rz, const SystemTrajectory& sys, const MatrixSequence& V, int kappa,
                           Step steps) {
  const Eigen::Index r = sys.r();
  const Eigen::Index q = sys.q();
  if (steps > rz.steps() || steps > static_cast<Step>(V.size())) throw IndexError("psi_matrix: not enough steps");
  Eigen::MatrixXd psi = Eigen::MatrixXd::Zero(r + q, steps);
  for (Step n = 0; n < steps; ++n) {
    psi.col(n).head(r) = V[n] * (sys.C[n] * rz.xhat.col(n) - rz.y.col(n));
    if (n >= kappa) psi.col(n).tail(q) = rz.e.col(n - kappa);
  }
  return psi;
}

Eigen::MatrixXd window_psi(const Realization& rz, const SystemTrajectory& sys, const MatrixSequence& V, int kappa,
                           Step n, Step window) {
  const Step ell = window - 1;
  if (n - ell < kappa) throw IndexError("window extends before step kappa");
  if (n >= rz.steps() || n >= static_cast<Step>(V.size())) throw IndexError("window_psi: step beyond data");
  Eigen::MatrixXd p(sys.r() + sys.q(), window);
  for (Step a = 0; a < window; ++a) {
    const Step j = n - ell + a;
    p.col(a) = build_psi(residual(V[j], sys.C[j], rz.xhat.col(j), rz.y.col(j)), rz.e.col(j - kappa));
  }
  return p;
}

Eigen::MatrixXd window_statistic(const Eigen::MatrixXd& P) {
  const Eigen::MatrixXd pt = P.transpose();
  return P * pt;
}

Eigen::MatrixXd window_statistic(const Eigen::MatrixXd& P, const Eigen::MatrixXd& G) {
  if (G.rows() != P.cols() || G.cols() != P.cols()) throw DimensionError("window_statistic: G does not match P");
  Eigen::LLT<Eigen::MatrixXd> llt(G);
  if (llt.info() != Eigen::Success) throw NotPositiveDefinite("G_n is not positive definite");
  return window_statistic_factored(P, llt.matrixL().toDenseMatrix());
}

Eigen::MatrixXd window_statistic_factored(const Eigen::MatrixXd& P, const Eigen::MatrixXd& G_lower) {
  if (G_lower.rows() != P.cols()) throw DimensionError("window_statistic: G does not match P");
  // X = G^{-1} P^T via two triangular solves; with G = I, X equals P^T exactly.
  Eigen::MatrixXd x = P.transpose();
  G_lower.triangularView<Eigen::Lower>().solveInPlace(x);
  G_lower.transpose().triangularView<Eigen::Upper>().solveInPlace(x);
  return P * x;
}

double negative_log_likelihood_inv(const Eigen::MatrixXd& Q, const Eigen::MatrixXd& S_inv, Step ell,
                                   Eigen::Index q, Eigen::Index r, bool* regularized) {
  if (Q.rows() != q + r || Q.cols() != q + r || S_inv.rows() != q + r) {
    throw DimensionError("negative_log_likelihood: Q and S must be (q+r) x (q+r)");
  }
  const double ld = log_det_spd(Q, regularized);
  const double tr = (S_inv.cwiseProduct(Q.transpose())).sum();
  return static_cast<double>(q + r - ell) * ld + tr;
}

double negative_log_likelihood(const Eigen::MatrixXd& Q, const Eigen::MatrixXd& S, Step ell, Eigen::Index q,
                               Eigen::Index r, bool* regularized) {
  Eigen::LLT<Eigen::MatrixXd> llt(S);
  if (llt.info() != Eigen::Success) throw NotPositiveDefinite("S is not positive definite");
  const Eigen::MatrixXd s_inv = llt.solve(Eigen::MatrixXd::Identity(S.rows(), S.cols()));
  return negative_log_likelihood_inv(Q, s_inv, ell, q, r, regularized);
}

double empirical_quantile(std::vector<double> samples, double prob) {
  if (samples.empty()) throw InsufficientSamples("quantile of an empty sample");
  if (!(prob >= 0.0 && prob <= 1.0)) throw std::invalid_argument("quantile probability outside [0, 1]");
  std::sort(samples.begin(), samples.end());
  const double h = static_cast<double>(samples.size() - 1) * prob;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, samples.size() - 1);
  return samples[lo] + (h - static_cast<double>(lo)) * (samples[hi] - samples[lo]);
}

double calibrate_threshold(std::span<const double> nll_samples, double false_alarm_rate) {
  if (!(false_alarm_rate > 0.0 && false_alarm_rate < 1.0)) {
    throw std::invalid_argument("false_alarm_rate must lie in (0, 1)");
  }
  const auto needed = static_cast<std::size_t>(std::ceil(10.0 / false_alarm_rate - 1e-9));
  if (nll_samples.size() < needed) {
    throw InsufficientSamples("calibration needs at least " + std::to_string(needed) + " samples, got " +
                              std::to_string(nll_samples.size()));
  }
  for (double s : nll_samples) {
    if (!std::isfinite(s)) throw std::invalid_argument("calibration samples must be finite");
  }
  return empirical_quantile({nll_samples.begin(), nll_samples.end()}, 1.0 - false_alarm_rate);
}

std::vector<double> pooled_nll(const std::vector<DetectionReport>& reports) {
  std::vector<double> out;
  for (const auto& rep : reports) {
    for (double v : rep.nll) {
      if (std::isfinite(v)) out.push_back(v);
    }
  }
  return out;
}

DetectionReport detect(const Realization& rz, const SystemTrajectory& sys, const NormalizationTables& tables,
                       const DetectorConfig& config) {
  validate_config(config, sys.q(), sys.r());
  const Step steps = rz.steps();
  check_tables(tables, sys, config, steps);
  const Eigen::Index q = sys.q();
  const Eigen::Index r = sys.r();
  const Step ell = config.ell();
  const Eigen::MatrixXd psi = psi_matrix(rz, sys, tables.V, config.kappa, steps);
  const Eigen::MatrixXd s_inv = statistic_scale(sys.sigma_e.inverse(), r);

  DetectionReport rep;
  rep.threshold = config.threshold;
  rep.first_valid_step = config.first_valid_step();
  rep.nll.assign(static_cast<std::size_t>(steps), kNaN);
  rep.alarms.assign(static_cast<std::size_t>(steps), 0);
  rep.c1_running.reserve(static_cast<std::size_t>(steps));
  rep.c2_running.reserve(static_cast<std::size_t>(steps));

  Eigen::MatrixXd c1 = Eigen::MatrixXd::Zero(r, q);
  Eigen::MatrixXd c2 = Eigen::MatrixXd::Zero(r, r);
  for (Step n = 0; n < steps; ++n) {
    const auto rho = psi.col(n).head(r);
    c1.noalias() += rho * psi.col(n).tail(q).transpose();
    c2.noalias() += rho * rho.transpose();
    const double inv = 1.0 / static_cast<double>(n + 1);
    rep.c1_running.push_back(c1 * inv);
    rep.c2_running.push_back(c2 * inv);

    if (n < rep.first_valid_step) continue;
    const Eigen::MatrixXd P = psi.middleCols(n - ell, config.window);
    const Eigen::MatrixXd Q = config.use_G ? window_statistic_factored(P, tables.G_lower_at(n)) : window_statistic(P);
    bool reg = false;
    const double value = negative_log_likelihood_inv(Q, s_inv, ell, q, r, &reg);
    rep.regularized_steps += reg ? 1 : 0;
    rep.nll[static_cast<std::size_t>(n)] = value;
    if (value > config.threshold) {
      rep.alarms[static_cast<std::size_t>(n)] = 1;
      if (!rep.first_alarm_step) rep.first_alarm_step = n;
    }
  }
  return rep;
}

std::vector<DetectionReport> detect_all(const std::vector<Realization>& realizations, const SystemTrajectory& sys,
                                        const NormalizationTables& tables, const DetectorConfig& config,
                                        std::size_t workers) {
  std::vector<DetectionReport> out(realizations.size());
  parallel_for(realizations.size(), workers,
               [&](std::size_t j) { out[j] = detect(realizations[j], sys, tables, config); });
  return out;
}

AsymptoticStatistics asymptotic_statistics(const Realization& rz, const SystemTrajectory& sys,
                                           const NormalizationTables& tables, int kappa, Step up_to) {
  if (up_to < kappa) throw std::invalid_argument("asymptotic_statistics: up_to must be >= kappa");
  if (up_to > rz.steps() || up_to > tables.steps()) throw IndexError("asymptotic_statistics: up_to beyond data");
  AsymptoticStatistics out{Eigen::MatrixXd::Zero(sys.r(), sys.q()), Eigen::MatrixXd::Zero(sys.r(), sys.r()), up_to};
  for (Step n = 0; n < up_to; ++n) {
    const Eigen::VectorXd rho = residual(tables.V[n], sys.C[n], rz.xhat.col(n), rz.y.col(n));
    if (n >= kappa) out.c1.noalias() += rho * rz.e.col(n - kappa).transpose();
    out.c2.noalias() += rho * rho.transpose();
  }
  out.c1 /= static_cast<double>(up_to);
  out.c2 /= static_cast<double>(up_to);
  return out;
}

Eigen::MatrixXd baseline_window_statistic(const Realization& rz, const SystemTrajectory& sys, const MatrixSequence& V,
                                          Step n, Step window) {
  const Eigen::Index q = sys.q();
  const Eigen::Index r = sys.r();
  const Step ell = window - 1;
  if (n < ell + 1 || n >= rz.steps() || n >= static_cast<Step>(V.size())) {
    throw IndexError("baseline window ending at step " + std::to_string(n) + " is not available");
  }
  Eigen::MatrixXd P(r + q, window);
  for (Step a = 0; a < window; ++a) {
    const Step j = n - ell + a;
    P.col(a).head(r) = V[j] * (sys.C[j] * rz.xhat.col(j) - rz.y.col(j));
    P.col(a).tail(q) = rz.e.col(j - 1);
  }
  const Eigen::MatrixXd pt = P.transpose();
  return P * pt;
}

DetectionReport detect_baseline(const Realization& rz, const SystemTrajectory& sys, const MatrixSequence& V,
                                Step window, double threshold) {
  const Eigen::Index q = sys.q();
  const Eigen::Index r = sys.r();
  if (window < q + r) throw std::invalid_argument("window must be at least q + r");
  const Step steps = rz.steps();
  if (static_cast<Step>(V.size()) < steps) throw IndexError("V table shorter than the realization");
  const Step ell = window - 1;
  Eigen::MatrixXd s_inv = Eigen::MatrixXd::Identity(r + q, r + q);
  s_inv.bottomRightCorner(q, q) = sys.sigma_e.inverse();

  DetectionReport rep;
  rep.threshold = threshold;
  rep.first_valid_step = ell + 1;
  rep.nll.assign(static_cast<std::size_t>(steps), kNaN);
  rep.alarms.assign(static_cast<std::size_t>(steps), 0);
  for (Step n = rep.first_valid_step; n < steps; ++n) {
    const Eigen::MatrixXd Q = baseline_window_statistic(rz, sys, V, n, window);
    bool reg = false;
    const double value = negative_log_likelihood_inv(Q, s_inv, ell, q, r, &reg);
    rep.regularized_steps += reg ? 1 : 0;
    rep.nll[static_cast<std::size_t>(n)] = value;
    if (value > threshold) {
      rep.alarms[static_cast<std::size_t>(n)] = 1;
      if (!rep.first_alarm_step) rep.first_alarm_step = n;
    }
  }
  return rep;
}

}  // namespace ltvwm
