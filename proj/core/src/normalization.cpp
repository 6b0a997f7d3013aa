#include "ltvwm/normalization.hpp"

#include <cmath>
#include <string>

#include "ltvwm/detector.hpp"
#include "ltvwm/errors.hpp"
#include "ltvwm/linalg.hpp"
#include "ltvwm/parallel.hpp"

namespace ltvwm {
namespace {

void check_window(const SystemTrajectory& sys, Step window, int kappa) {
  if (window < sys.q() + sys.r()) {
    throw std::invalid_argument("window " + std::to_string(window) + " is smaller than q + r = " +
                                std::to_string(sys.q() + sys.r()));
  }
  if (kappa < 1) throw std::invalid_argument("kappa must be >= 1");
}

void check_unattacked(const EnsembleRun& ensemble, const SystemTrajectory& sys) {
  if (ensemble.attacked) throw std::invalid_argument("normalization requires an unattacked ensemble");
  if (ensemble.realizations.empty()) throw InsufficientSamples("empty ensemble");
  if (ensemble.sys_fingerprint != 0 && ensemble.sys_fingerprint != fingerprint(sys)) {
    throw FingerprintMismatch("ensemble was generated from a different system");
  }
}

Eigen::MatrixXd unit_diagonal(const Eigen::MatrixXd& g) {
  const Eigen::VectorXd scale = g.diagonal().cwiseMax(0.0).cwiseSqrt().cwiseInverse();
  Eigen::MatrixXd out = scale.asDiagonal() * g * scale.asDiagonal();
  out.diagonal().setOnes();
  return out;
}

}  // namespace

const Eigen::MatrixXd& NormalizationTables::G_at(Step n) const {
  const Step idx = n - first_window_end();
  if (idx < 0 || idx >= static_cast<Step>(G.size())) {
    throw IndexError("no G_n for window end " + std::to_string(n));
  }
  return G[static_cast<std::size_t>(idx)];
}

const Eigen::MatrixXd& NormalizationTables::G_lower_at(Step n) const {
  const Step idx = n - first_window_end();
  if (idx < 0 || idx >= static_cast<Step>(G_lower.size())) {
    throw IndexError("no G_n factor for window end " + std::to_string(n));
  }
  return G_lower[static_cast<std::size_t>(idx)];
}

MatrixSequence sigma_delta(const SystemTrajectory& sys, Step up_to) {
  check_dimensions(sys);
  if (up_to < 0 || up_to > sys.horizon) throw IndexError("sigma_delta: up_to outside [0, horizon]");
  MatrixSequence out;
  out.reserve(static_cast<std::size_t>(up_to + 1));
  out.push_back(Eigen::MatrixXd::Zero(sys.p(), sys.p()));
  for (Step n = 0; n < up_to; ++n) {
    const Eigen::MatrixXd aund = sys.A[n] + sys.L[n] * sys.C[n];
    Eigen::MatrixXd next = aund * out.back() * aund.transpose() + sys.sigma_w[n] +
                           sys.L[n] * sys.sigma_z[n] * sys.L[n].transpose();
    out.push_back(linalg::symmetrize(next));
  }
  return out;
}

Eigen::MatrixXd matrix_normalizer(const SystemTrajectory& sys, const Eigen::MatrixXd& sigma_delta_n, Step n) {
  if (n < 0 || n >= sys.horizon) throw IndexError("matrix_normalizer: step outside horizon");
  if (sigma_delta_n.rows() != sys.p() || sigma_delta_n.cols() != sys.p()) {
    throw DimensionError("matrix_normalizer: sigma_delta has wrong shape");
  }
  return linalg::inverse_sqrt_spd(sys.C[n] * sigma_delta_n * sys.C[n].transpose() + sys.sigma_z[n]);
}

namespace {

// Per-step estimate; callers have already checked the ensemble against the system.
Eigen::MatrixXd vn_ensemble_unchecked(const EnsembleRun& ensemble, const SystemTrajectory& sys, Step n) {
  const auto count = static_cast<Eigen::Index>(ensemble.realizations.size());
  if (count < sys.r() + 1) throw InsufficientSamples("vn_ensemble: need at least r + 1 realizations");
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(sys.r(), sys.r());
  for (const auto& rz : ensemble.realizations) {
    if (n < 0 || n >= rz.steps()) throw IndexError("vn_ensemble: step outside realization");
    const Eigen::VectorXd res = sys.C[n] * rz.xhat.col(n) - rz.y.col(n);
    cov.noalias() += res * res.transpose();
  }
  cov /= static_cast<double>(count);
  return linalg::inverse_sqrt_spd(cov);
}

}  // namespace

Eigen::MatrixXd vn_ensemble(const EnsembleRun& ensemble, const SystemTrajectory& sys, Step n) {
  check_unattacked(ensemble, sys);
  return vn_ensemble_unchecked(ensemble, sys, n);
}

Eigen::VectorXd lag_correlations(const SystemTrajectory& sys, const NormalizationTables& tables, Step j,
                                 Step max_lag) {
  const double trace_s = static_cast<double>(sys.r()) + sys.sigma_e.trace();
  Eigen::VectorXd out = Eigen::VectorXd::Zero(max_lag + 1);
  out[0] = 1.0;
  if (max_lag < 1) return out;
  if (j < 0 || j + max_lag >= tables.steps()) throw IndexError("lag_correlations: window leaves the tables");
  // U_i = Aund_(j+i-1, j+1) (Aund_j Sigma_delta_j C_j^T V_j^T + L_j Sigma_z_j V_j^T)
  const Eigen::MatrixXd vt = tables.V[j].transpose();
  Eigen::MatrixXd u = (sys.A[j] + sys.L[j] * sys.C[j]) * tables.sigma_delta[j] * sys.C[j].transpose() * vt +
                      sys.L[j] * sys.sigma_z[j] * vt;
  for (Step i = 1; i <= max_lag; ++i) {
    if (i > 1) u = (sys.A[j + i - 1] + sys.L[j + i - 1] * sys.C[j + i - 1]) * u;
    out[i] = (tables.V[j + i] * sys.C[j + i] * u).trace() / trace_s;
  }
  return out;
}

Eigen::MatrixXd gn_analytic(const SystemTrajectory& sys, const NormalizationTables& tables, Step n, Step window,
                            int kappa) {
  check_window(sys, window, kappa);
  const Step ell = window - 1;
  if (n < ell + kappa) throw IndexError("gn_analytic: window extends before step kappa");
  if (n >= tables.steps()) throw IndexError("gn_analytic: window end beyond the tables");
  Eigen::MatrixXd g = Eigen::MatrixXd::Identity(window, window);
  for (Step a = 0; a < window; ++a) {
    const Step j = n - ell + a;
    const Eigen::VectorXd lags = lag_correlations(sys, tables, j, window - 1 - a);
    for (Step b = a + 1; b < window; ++b) g(a, b) = g(b, a) = lags[b - a];
  }
  return g;
}

Eigen::MatrixXd gn_ensemble(const EnsembleRun& ensemble, const SystemTrajectory& sys,
                            const NormalizationTables& tables, Step n, Step window, int kappa,
                            std::vector<std::string>* warnings) {
  check_window(sys, window, kappa);
  check_unattacked(ensemble, sys);
  const Step ell = window - 1;
  if (n < ell + kappa) throw IndexError("gn_ensemble: window extends before step kappa");
  const auto count = ensemble.realizations.size();
  if (warnings && static_cast<Step>(count) < window) {
    warnings->push_back("gn_ensemble: " + std::to_string(count) + " realizations for a window of " +
                        std::to_string(window) + "; G_n is poorly conditioned");
  }
  const double trace_s = static_cast<double>(sys.r()) + sys.sigma_e.trace();
  Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(window, window);
  for (const auto& rz : ensemble.realizations) {
    const Eigen::MatrixXd p = window_psi(rz, sys, tables.V, kappa, n, window);
    sum.noalias() += p.transpose() * p;
  }
  sum /= static_cast<double>(count) * trace_s;
  Eigen::MatrixXd g = unit_diagonal(linalg::symmetrize(sum));
  return unit_diagonal(linalg::floor_eigenvalues(g, kGEigenFloor));
}

void factor_G(NormalizationTables& tables) {
  tables.G_lower.clear();
  tables.G_lower.reserve(tables.G.size());
  for (std::size_t i = 0; i < tables.G.size(); ++i) {
    const std::string label = "G_n at window end " + std::to_string(tables.first_window_end() + static_cast<Step>(i));
    tables.G_lower.push_back(linalg::cholesky_lower(tables.G[i], label.c_str()));
  }
}

void set_identity_G(NormalizationTables& tables) {
  const Step count = std::max<Step>(0, tables.steps() - tables.first_window_end());
  tables.G.assign(static_cast<std::size_t>(count), Eigen::MatrixXd::Identity(tables.window, tables.window));
  tables.G_lower = tables.G;
}

Eigen::MatrixXd statistic_scale(const Eigen::MatrixXd& sigma_e, Eigen::Index r) {
  const Eigen::Index q = sigma_e.rows();
  Eigen::MatrixXd s = Eigen::MatrixXd::Zero(r + q, r + q);
  s.topLeftCorner(r, r).setIdentity();
  s.bottomRightCorner(q, q) = sigma_e;
  return s;
}

NormalizationTables build_analytic_tables(const SystemTrajectory& sys, Step steps, const TableOptions& options) {
  check_dimensions(sys);
  check_window(sys, options.window, options.kappa);
  if (steps < 1 || steps > sys.horizon) throw IndexError("build_analytic_tables: steps outside [1, horizon]");
  NormalizationTables t;
  t.window = options.window;
  t.kappa = options.kappa;
  t.provenance = Provenance::analytic;
  t.sys_fingerprint = fingerprint(sys);
  t.sigma_delta = sigma_delta(sys, steps - 1);
  t.V.resize(static_cast<std::size_t>(steps));
  for (Step n = 0; n < steps; ++n) t.V[n] = matrix_normalizer(sys, t.sigma_delta[n], n);
  if (!options.with_G) return t;

  const Step first = t.first_window_end();
  const Step count = std::max<Step>(0, steps - first);
  const Step ell = t.window - 1;
  // lags[j] holds E[psi_{j+i}^T psi_j] / tr(S) for i = 0..ell, shared by every window containing j
  std::vector<Eigen::VectorXd> lags(static_cast<std::size_t>(steps));
  parallel_for(static_cast<std::size_t>(steps), options.workers, [&](std::size_t j) {
    const Step max_lag = std::min<Step>(ell, steps - 1 - static_cast<Step>(j));
    lags[j] = lag_correlations(sys, t, static_cast<Step>(j), max_lag);
  });
  t.G.resize(static_cast<std::size_t>(count));
  t.G_lower.resize(static_cast<std::size_t>(count));
  parallel_for(static_cast<std::size_t>(count), options.workers, [&](std::size_t idx) {
    const Step n = first + static_cast<Step>(idx);
    Eigen::MatrixXd g = Eigen::MatrixXd::Identity(t.window, t.window);
    for (Step a = 0; a < t.window; ++a) {
      const Eigen::VectorXd& lj = lags[static_cast<std::size_t>(n - ell + a)];
      for (Step b = a + 1; b < t.window; ++b) g(a, b) = g(b, a) = lj[b - a];
    }
    const std::string label = "G_n at window end " + std::to_string(n);
    t.G_lower[idx] = linalg::cholesky_lower(g, label.c_str());
    t.G[idx] = std::move(g);
  });
  return t;
}

NormalizationTables build_ensemble_tables(const SystemTrajectory& sys, const EnsembleRun& ensemble,
                                          const TableOptions& options) {
  check_dimensions(sys);
  check_window(sys, options.window, options.kappa);
  check_unattacked(ensemble, sys);
  Step steps = ensemble.realizations.front().steps();
  for (const auto& rz : ensemble.realizations) steps = std::min(steps, rz.steps());

  NormalizationTables t;
  t.window = options.window;
  t.kappa = options.kappa;
  t.provenance = Provenance::ensemble;
  t.ensemble_count = ensemble.realizations.size();
  t.sys_fingerprint = fingerprint(sys);
  t.V.resize(static_cast<std::size_t>(steps));
  t.sigma_delta.resize(static_cast<std::size_t>(steps));
  const double inv_count = 1.0 / static_cast<double>(t.ensemble_count);
  parallel_for(static_cast<std::size_t>(steps), options.workers, [&](std::size_t idx) {
    const auto n = static_cast<Step>(idx);
    t.V[idx] = vn_ensemble_unchecked(ensemble, sys, n);
    Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(sys.p(), sys.p());
    for (const auto& rz : ensemble.realizations) {
      const Eigen::VectorXd delta = rz.xhat.col(n) - rz.x.col(n);
      cov.noalias() += delta * delta.transpose();
    }
    t.sigma_delta[idx] = cov * inv_count;
  });
  if (!options.with_G) return t;
  if (static_cast<Step>(t.ensemble_count) < t.window) {
    t.warnings.push_back("ensemble of " + std::to_string(t.ensemble_count) + " realizations is smaller than the window " +
                         std::to_string(t.window) + "; G_n estimates are poorly conditioned");
  }

  // psi for every realization once, then one Gram sum per window end
  std::vector<Eigen::MatrixXd> psi(t.ensemble_count);
  parallel_for(t.ensemble_count, options.workers, [&](std::size_t j) {
    psi[j] = psi_matrix(ensemble.realizations[j], sys, t.V, t.kappa, steps);
  });
  const double trace_s = static_cast<double>(sys.r()) + sys.sigma_e.trace();
  const Step first = t.first_window_end();
  const Step count = std::max<Step>(0, steps - first);
  const Step ell = t.window - 1;
  t.G.resize(static_cast<std::size_t>(count));
  t.G_lower.resize(static_cast<std::size_t>(count));
  parallel_for(static_cast<std::size_t>(count), options.workers, [&](std::size_t idx) {
    const Step n = first + static_cast<Step>(idx);
    Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(t.window, t.window);
    for (const auto& ps : psi) {
      const auto block = ps.middleCols(n - ell, t.window);
      sum.noalias() += block.transpose() * block;
    }
    sum *= inv_count / trace_s;
    Eigen::MatrixXd g = unit_diagonal(linalg::floor_eigenvalues(unit_diagonal(linalg::symmetrize(sum)), kGEigenFloor));
    const std::string label = "G_n at window end " + std::to_string(n);
    t.G_lower[idx] = linalg::cholesky_lower(g, label.c_str());
    t.G[idx] = std::move(g);
  });
  return t;
}

}  // namespace ltvwm
