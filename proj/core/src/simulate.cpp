#include "ltvwm/simulate.hpp"

#include <string>

#include "ltvwm/errors.hpp"
#include "ltvwm/linalg.hpp"
#include "ltvwm/parallel.hpp"

namespace ltvwm {
namespace {

// Shared by step() and Simulator so a stored run can be replayed bit for bit.
inline Eigen::VectorXd propagate_state(const Eigen::MatrixXd& a, const Eigen::MatrixXd& bk, const Eigen::MatrixXd& b,
                                       const Eigen::VectorXd& x, const Eigen::VectorXd& xhat,
                                       const Eigen::VectorXd& e, const Eigen::VectorXd& w) {
  Eigen::VectorXd next = a * x;
  next += bk * xhat;
  next += b * e;
  next += w;
  return next;
}

inline Eigen::VectorXd propagate_observer(const Eigen::MatrixXd& observer, const Eigen::MatrixXd& b,
                                          const Eigen::MatrixXd& l, const Eigen::VectorXd& xhat,
                                          const Eigen::VectorXd& e, const Eigen::VectorXd& y) {
  Eigen::VectorXd next = observer * xhat;
  next += b * e;
  next -= l * y;
  return next;
}

void require_size(const Eigen::VectorXd& v, Eigen::Index n, const char* name) {
  if (v.size() != n) {
    throw DimensionError(std::string(name) + " has size " + std::to_string(v.size()) + ", expected " +
                         std::to_string(n));
  }
}

}  // namespace

Eigen::VectorXd draw_watermark(Rng& rng, const Eigen::MatrixXd& sigma_e) {
  const Eigen::MatrixXd l = linalg::cholesky_lower(sigma_e, "sigma_e");
  return l * rng.standard_normal(l.cols());
}

StepResult step(const SystemTrajectory& sys, Step n, const Eigen::VectorXd& x, const Eigen::VectorXd& xhat,
                const Eigen::VectorXd& e, const Eigen::VectorXd& w, const Eigen::VectorXd& z,
                const Eigen::VectorXd& v) {
  if (n < 0 || n >= sys.horizon) throw IndexError("step: n outside horizon");
  const Eigen::Index p = sys.p(), q = sys.q(), r = sys.r();
  require_size(x, p, "x");
  require_size(xhat, p, "xhat");
  require_size(e, q, "e");
  require_size(w, p, "w");
  require_size(z, r, "z");
  require_size(v, r, "v");
  const Eigen::MatrixXd bk = sys.B[n] * sys.K[n];
  const Eigen::MatrixXd observer = sys.A[n] + bk + sys.L[n] * sys.C[n];
  StepResult out;
  out.y = sys.C[n] * x + z + v;
  out.x_next = propagate_state(sys.A[n], bk, sys.B[n], x, xhat, e, w);
  out.xhat_next = propagate_observer(observer, sys.B[n], sys.L[n], xhat, e, out.y);
  return out;
}

std::uint64_t realization_seed(std::uint64_t base_seed, std::uint64_t index) {
  return derive_seed(base_seed, index);
}

Simulator::Simulator(const SystemTrajectory& sys, Step n_steps) : sys_(sys), steps_(n_steps) {
  check_dimensions(sys);
  if (n_steps < 1 || n_steps > sys.horizon) {
    throw IndexError("n_steps " + std::to_string(n_steps) + " outside [1, horizon]");
  }
  bk_.reserve(n_steps);
  observer_.reserve(n_steps);
  for (Step n = 0; n < n_steps; ++n) {
    bk_.push_back(sys.B[n] * sys.K[n]);
    observer_.push_back(sys.A[n] + bk_.back() + sys.L[n] * sys.C[n]);
  }
  w_ = GaussianSequenceSampler(sys.sigma_w, n_steps, "sigma_w");
  z_ = GaussianSequenceSampler(sys.sigma_z, n_steps, "sigma_z");
  e_factor_ = linalg::cholesky_lower(sys.sigma_e, "sigma_e");
}

Realization Simulator::run(const std::optional<AttackSpec>& attack, std::uint64_t seed,
                           const SimulationOptions& options) const {
  const Eigen::Index p = sys_.p(), q = sys_.q(), r = sys_.r();
  Rng w_rng(seed, Stream::process_noise);
  Rng z_rng(seed, Stream::measurement_noise);
  Rng e_rng(seed, Stream::watermark);
  std::optional<AttackProcess> attacker;
  if (attack) attacker.emplace(*attack, sys_, steps_, seed);

  Realization out;
  out.seed = seed;
  out.x.resize(p, steps_ + 1);
  out.xhat.resize(p, steps_ + 1);
  out.y.resize(r, steps_);
  out.e.resize(q, steps_);
  out.u.resize(q, steps_);
  out.v.setZero(r, steps_);
  out.attack_active.assign(static_cast<std::size_t>(steps_), 0);
  if (options.keep_noise) {
    out.w.resize(p, steps_);
    out.z.resize(r, steps_);
  }

  Eigen::VectorXd x = options.x0.value_or(Eigen::VectorXd::Zero(p));
  Eigen::VectorXd xhat = options.xhat0.value_or(Eigen::VectorXd::Zero(p));
  require_size(x, p, "x0");
  require_size(xhat, p, "xhat0");
  out.x.col(0) = x;
  out.xhat.col(0) = xhat;

  for (Step n = 0; n < steps_; ++n) {
    const Eigen::VectorXd w = w_.draw(n, w_rng);
    const Eigen::VectorXd z = z_.draw(n, z_rng);
    const Eigen::VectorXd e = e_factor_ * e_rng.standard_normal(q);

    const Eigen::VectorXd y_true = sys_.C[n] * x + z;
    Eigen::VectorXd y;
    if (attacker && attacker->active(n)) {
      AttackedMeasurement m = attacker->measure(n, x, z, y_true);
      y = std::move(m.y);
      out.v.col(n) = m.v;
      out.attack_active[static_cast<std::size_t>(n)] = 1;
    } else {
      y = y_true;
    }

    out.y.col(n) = y;
    out.e.col(n) = e;
    out.u.col(n) = sys_.K[n] * xhat + e;
    if (options.keep_noise) {
      out.w.col(n) = w;
      out.z.col(n) = z;
    }

    Eigen::VectorXd x_next = propagate_state(sys_.A[n], bk_[n], sys_.B[n], x, xhat, e, w);
    xhat = propagate_observer(observer_[n], sys_.B[n], sys_.L[n], xhat, e, y);
    x = std::move(x_next);
    out.x.col(n + 1) = x;
    out.xhat.col(n + 1) = xhat;
  }
  return out;
}

Realization run_realization(const SystemTrajectory& sys, const std::optional<AttackSpec>& attack,
                            std::uint64_t seed, Step n_steps, const SimulationOptions& options) {
  return Simulator(sys, n_steps).run(attack, seed, options);
}

EnsembleRun run_ensemble(const SystemTrajectory& sys, const std::optional<AttackSpec>& attack, std::size_t count,
                         std::uint64_t base_seed, Step n_steps, const EnsembleOptions& options) {
  if (count < 1) throw std::invalid_argument("run_ensemble: count must be >= 1");
  const Simulator simulator(sys, n_steps);
  EnsembleRun out;
  out.sys_fingerprint = fingerprint(sys);
  out.base_seed = base_seed;
  out.attacked = attack.has_value();
  out.seeds.resize(count);
  out.realizations.resize(count);
  for (std::size_t j = 0; j < count; ++j) out.seeds[j] = realization_seed(base_seed, j);
  parallel_for(count, options.workers, [&](std::size_t j) {
    out.realizations[j] = simulator.run(attack, out.seeds[j], options.simulation);
  });
  return out;
}

}  // namespace ltvwm
