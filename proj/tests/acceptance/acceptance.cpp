// Acceptance suite: one PASS/FAIL line per criterion. Seeds are fixed (base 42) and the
// Example-1 horizon is 10^4 steps throughout.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <memory>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "ltvwm/detector.hpp"
#include "ltvwm/linalg.hpp"
#include "ltvwm/normalization.hpp"
#include "ltvwm/pipeline.hpp"
#include "ltvwm/scenarios.hpp"
#include "ltvwm/simulate.hpp"
#include "oracles.hpp"

using namespace ltvwm;

namespace {

constexpr std::uint64_t kSeed = 42;
constexpr Step kExampleHorizon = 10000;
constexpr Step kWindow = 20;
constexpr double kRate = 0.002;

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

// Example 1 with an unattacked 200-run ensemble and model-based tables, shared by criteria 2 and 3.
struct Example1Context {
  SystemTrajectory sys;
  int kappa = 0;
  EnsembleRun ensemble;
  NormalizationTables tables;
};

const Example1Context& example1_context() {
  static std::unique_ptr<Example1Context> ctx;
  if (!ctx) {
    ctx = std::make_unique<Example1Context>();
    ctx->sys = example1_system(kExampleHorizon).sys;
    ctx->kappa = compute_kappa(ctx->sys, kExampleHorizon);
    ctx->ensemble = run_ensemble(ctx->sys, std::nullopt, 200, kSeed, kExampleHorizon);
    TableOptions to;
    to.window = kWindow;
    to.kappa = ctx->kappa;
    ctx->tables = build_analytic_tables(ctx->sys, kExampleHorizon, to);
  }
  return *ctx;
}

double c1_bound(const SystemTrajectory& sys) {
  // ||Sigma_e^{1/2}|| is the square root of the largest eigenvalue
  return 0.05 * std::sqrt(linalg::spectral_norm(sys.sigma_e));
}

AttackSpec always_on_generalized(const SystemTrajectory& sys, double alpha) {
  AttackSpec spec;
  spec.mode = AttackMode::generalized;
  spec.alpha = alpha;
  spec.sigma_omega = {sys.sigma_w.front()};
  spec.sigma_zeta = {sys.sigma_z.front()};
  spec.start_step = 0;
  spec.seed = kSeed;
  return spec;
}

AsymptoticStatistics example1_statistics(const SystemTrajectory& sys, const NormalizationTables& tables, int kappa,
                                         const std::optional<AttackSpec>& attack) {
  const EnsembleRun run = run_ensemble(sys, attack, 1, kSeed, kExampleHorizon);
  return asymptotic_statistics(run.realizations.front(), sys, tables, kappa, kExampleHorizon);
}

// ---------------------------------------------------------------------------

Outcome criterion1() {
  const auto sys = example1_system(kExampleHorizon).sys;
  const auto t0 = Clock::now();
  const int kappa = compute_kappa(sys, kExampleHorizon);
  const double dt = seconds_since(t0);
  return {kappa == 2 && dt < 1.0, "kappa = " + std::to_string(kappa) + ", " + fmt("%.3f s", dt)};
}

Outcome criterion2() {
  const auto t0 = Clock::now();
  const auto& ctx = example1_context();
  DetectorConfig cfg;
  cfg.window = kWindow;
  cfg.kappa = ctx.kappa;
  cfg.false_alarm_rate = kRate;

  struct Tally {
    double threshold = 0.0;
    double expected = 0.0;
    std::size_t anomalous = 0;
    std::size_t worst = 0;
  };
  auto tally = [&](bool use_G) {
    cfg.use_G = use_G;
    const auto reports = detect_all(ctx.ensemble.realizations, ctx.sys, ctx.tables, cfg);
    Tally t;
    t.threshold = calibrate_threshold(pooled_nll(reports), kRate);
    for (const auto& rep : reports) {
      const Step valid = rep.steps() - rep.first_valid_step;
      t.expected = kRate * static_cast<double>(valid);
      std::size_t count = 0;
      for (Step n = rep.first_valid_step; n < rep.steps(); ++n) count += rep.nll[n] > t.threshold;
      t.worst = std::max(t.worst, count);
      if (static_cast<double>(count) > 3.0 * t.expected) ++t.anomalous;
    }
    return t;
  };
  const Tally with_G = tally(true);
  const Tally without_G = tally(false);
  const double dt = seconds_since(t0);

  std::ostringstream d;
  d << "expected " << with_G.expected << " exceedances per run; anomalous runs (> 3x) with G " << with_G.anomalous
    << " (worst " << with_G.worst << "), without G " << without_G.anomalous << " (worst " << without_G.worst
    << "); " << fmt("%.1f s", dt);
  const bool pass = with_G.anomalous == 0 && without_G.anomalous > with_G.anomalous && dt < 300.0;
  return {pass, d.str()};
}

Outcome criterion3() {
  // i.i.d. windows, G = I
  const Eigen::Index q = 1, r = 2;
  const Eigen::MatrixXd sigma_e = Eigen::MatrixXd::Constant(1, 1, 1e-3);
  const Eigen::MatrixXd S = statistic_scale(sigma_e, r);
  const Eigen::MatrixXd root = S.llt().matrixL();
  const Eigen::MatrixXd identity = Eigen::MatrixXd::Identity(kWindow, kWindow);
  Rng rng(derive_seed(kSeed, 3));
  const int windows = 10000;
  Eigen::MatrixXd iid_sum = Eigen::MatrixXd::Zero(q + r, q + r);
  for (int w = 0; w < windows; ++w) {
    Eigen::MatrixXd P(q + r, kWindow);
    for (Step a = 0; a < kWindow; ++a) P.col(a) = root * rng.standard_normal(q + r);
    iid_sum += window_statistic_factored(P, identity);
  }
  const Eigen::MatrixXd iid_mean = iid_sum / (static_cast<double>(windows) * kWindow);
  const double iid_err = (iid_mean - S).norm() / S.norm();

  // Example-1 residuals with model-based G_n
  const auto& ctx = example1_context();
  const Eigen::MatrixXd S1 = statistic_scale(ctx.sys.sigma_e, ctx.sys.r());
  Eigen::MatrixXd corr_sum = Eigen::MatrixXd::Zero(S1.rows(), S1.cols());
  std::size_t count = 0;
  const Step first = ctx.tables.first_window_end();
  for (const auto& rz : ctx.ensemble.realizations) {
    const Eigen::MatrixXd psi = psi_matrix(rz, ctx.sys, ctx.tables.V, ctx.kappa, rz.steps());
    for (Step n = first; n < rz.steps(); ++n) {
      corr_sum += window_statistic_factored(psi.middleCols(n - kWindow + 1, kWindow), ctx.tables.G_lower_at(n));
      ++count;
    }
  }
  const Eigen::MatrixXd corr_mean = corr_sum / (static_cast<double>(count) * kWindow);
  const double corr_err = (corr_mean - S1).norm() / S1.norm();

  std::ostringstream d;
  d << "iid relative error " << fmt("%.4f", iid_err) << " over " << windows << " windows (<= 0.05); Example 1 "
    << fmt("%.4f", corr_err) << " over " << count << " windows (<= 0.10), residual block diag ["
    << fmt("%.3f", corr_mean(0, 0)) << ", " << fmt("%.3f", corr_mean(1, 1)) << "]";
  return {iid_err <= 0.05 && corr_err <= 0.10, d.str()};
}

Outcome criterion4() {
  const auto sys = example1_system(kExampleHorizon).sys;
  const int kappa = compute_kappa(sys, kExampleHorizon);
  TableOptions to;
  to.kappa = kappa;
  to.with_G = false;
  const auto tables = build_analytic_tables(sys, kExampleHorizon, to);
  const double bound1 = c1_bound(sys);
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(sys.r(), sys.r());

  const auto clean = example1_statistics(sys, tables, kappa, std::nullopt);
  const double c1 = linalg::spectral_norm(clean.c1);
  const double c2 = linalg::spectral_norm(clean.c2 - I);
  const auto attacked = example1_statistics(sys, tables, kappa, always_on_generalized(sys, -1.0));
  const double a1 = linalg::spectral_norm(attacked.c1);
  const double a2 = linalg::spectral_norm(attacked.c2 - I);

  const bool clean_ok = c1 <= bound1 && c2 <= 0.05;
  const bool attack_flagged = a1 >= 3.0 * bound1 || a2 >= 3.0 * 0.05;
  std::ostringstream d;
  d << "clean |C1| " << fmt("%.3e", c1) << " (<= " << fmt("%.3e", bound1) << "), |C2-I| " << fmt("%.4f", c2)
    << " (<= 0.05); alpha=-1 |C1| " << fmt("%.3e", a1) << ", |C2-I| " << fmt("%.4f", a2) << " (need 3x a bound)";
  return {clean_ok && attack_flagged, d.str()};
}

Outcome criterion5() {
  const auto sys = example1_system(kExampleHorizon).sys;
  const int kappa = compute_kappa(sys, kExampleHorizon);
  TableOptions to;
  to.kappa = kappa;
  to.with_G = false;
  const auto tables = build_analytic_tables(sys, kExampleHorizon, to);
  const double bound1 = c1_bound(sys);
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(sys.r(), sys.r());

  const auto null_attack = example1_statistics(sys, tables, kappa, always_on_generalized(sys, 0.0));
  const double c1_null = linalg::spectral_norm(null_attack.c1);
  const double c2_null = linalg::spectral_norm(null_attack.c2 - I);
  bool pass = c1_null <= bound1 && c2_null >= 0.2;
  std::ostringstream d;
  d << "alpha=0 |C1| " << fmt("%.3e", c1_null) << " (<= " << fmt("%.3e", bound1) << "), |C2-I| "
    << fmt("%.3f", c2_null) << " (>= 0.2)";
  for (double alpha : {-0.5, -1.0}) {
    const auto st = example1_statistics(sys, tables, kappa, always_on_generalized(sys, alpha));
    const double c1 = linalg::spectral_norm(st.c1);
    pass = pass && c1 >= 3.0 * c1_null;
    d << "; alpha=" << alpha << " |C1| " << fmt("%.3e", c1) << " (ratio " << fmt("%.2f", c1 / c1_null) << ", >= 3)";
  }
  return {pass, d.str()};
}

Outcome criterion6() {
  const auto t0 = Clock::now();
  const ScenarioBundle bundle = vehicle_scenario(default_reference_path());
  ProtocolOptions opt;  // 50 s start, 0.15 s blend, 200 calibration runs, 50 attacked runs, seed 42
  const ExperimentPlan plan = experiment_protocol(bundle, opt);
  const ProtocolRun run = run_protocol(bundle, plan);
  const Step deadline = plan.blend_end_step() + 3 * opt.window;
  std::size_t on_time = 0;
  for (const auto& rep : run.reports) {
    const auto hit = first_alarm_from(rep, plan.start_step);
    if (hit && *hit <= deadline) ++on_time;
  }
  const double dt = seconds_since(t0);
  const double rate = static_cast<double>(on_time) / static_cast<double>(run.reports.size());
  const double pre = run.summary.pre_attack_alarm_fraction;
  std::ostringstream d;
  d << on_time << "/" << run.reports.size() << " runs alarm in [" << plan.start_step << ", " << deadline
    << "] (>= 95%); pre-attack alarm fraction " << fmt("%.5f", pre) << " (<= " << 2.5 * kRate << "); threshold "
    << fmt("%.2f", run.calibration.threshold) << "; " << fmt("%.1f s", dt);
  return {rate >= 0.95 && pre <= 2.5 * kRate && dt < 600.0, d.str()};
}

Outcome criterion7() {
  std::mt19937_64 pick(derive_seed(kSeed, 7));
  double worst_sigma = 0.0, worst_v = 0.0;
  int validated = 0;
  for (int k = 0; k < 20; ++k) {
    const int p = 1 + static_cast<int>(pick() % 4);
    const int q = 1 + static_cast<int>(pick() % static_cast<std::uint64_t>(p));
    const int r = 1 + static_cast<int>(pick() % static_cast<std::uint64_t>(p));
    const Step horizon = 50;
    const auto sys = ltvwm::testing::random_stable_system(p, q, r, horizon, derive_seed(kSeed, 700 + k));
    validated += validate_system(sys).ok();
    const auto sd = sigma_delta(sys, horizon);
    for (Step n = 0; n <= horizon; ++n) {
      const Eigen::MatrixXd direct = ltvwm::testing::sigma_delta_direct(sys, n);
      worst_sigma = std::max(worst_sigma, (sd[n] - direct).cwiseAbs().maxCoeff());
      if (n < horizon) {
        const Eigen::MatrixXd V = matrix_normalizer(sys, sd[n], n);
        const Eigen::MatrixXd M = sys.C[n] * sd[n] * sys.C[n].transpose() + sys.sigma_z[n];
        const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(r, r);
        worst_v = std::max(worst_v, (V * M * V.transpose() - I).cwiseAbs().maxCoeff());
      }
    }
  }
  std::ostringstream d;
  d << validated << "/20 systems validated; max |recursion - direct| " << fmt("%.2e", worst_sigma)
    << ", max |V M V^T - I| " << fmt("%.2e", worst_v) << " (<= 1e-10)";
  return {validated == 20 && worst_sigma <= 1e-10 && worst_v <= 1e-10, d.str()};
}

Outcome criterion8() {
  const Step n = 1000;
  const auto sys = example1_system(kExampleHorizon).sys;
  const int kappa = compute_kappa(sys, kExampleHorizon);
  TableOptions to;
  to.kappa = kappa;
  to.with_G = false;
  const auto tables = build_analytic_tables(sys, n + 1, to);

  const EnsembleRun big = run_ensemble(sys, std::nullopt, 1000, kSeed, n + 1);
  const Eigen::MatrixXd v_est = vn_ensemble(big, sys, n);
  const double v_err = linalg::spectral_norm(v_est - tables.V[n]) / linalg::spectral_norm(tables.V[n]);

  EnsembleRun small = big;
  small.realizations.resize(200);
  small.seeds.resize(200);
  const Eigen::MatrixXd g_est = gn_ensemble(small, sys, tables, n, kWindow, kappa);
  const Eigen::MatrixXd g_model = gn_analytic(sys, tables, n, kWindow, kappa);
  double g_err = 0.0;
  for (Eigen::Index a = 0; a < kWindow; ++a) {
    for (Eigen::Index b = 0; b < kWindow; ++b) {
      if (a != b) g_err = std::max(g_err, std::abs(g_est(a, b) - g_model(a, b)));
    }
  }
  std::ostringstream d;
  d << "at n = " << n << ": V relative spectral error " << fmt("%.4f", v_err)
    << " (1000 runs, <= 0.10); G max off-diagonal error " << fmt("%.4f", g_err) << " (200 runs, <= 0.05)";
  return {v_err <= 0.10 && g_err <= 0.05, d.str()};
}

Outcome criterion9() {
  const ScenarioBundle bundle = vehicle_scenario(default_reference_path());
  const SystemTrajectory& sys = bundle.sys;
  const int kappa = compute_kappa(sys, sys.horizon);
  TableOptions to;
  to.window = kWindow;
  to.kappa = 1;
  to.with_G = false;
  NormalizationTables tables = build_analytic_tables(sys, sys.horizon, to);
  set_identity_G(tables);

  // clean runs and replay-attacked runs
  ProtocolOptions opt;
  opt.attacked_count = 3;
  const ExperimentPlan plan = experiment_protocol(bundle, opt);
  std::vector<Realization> runs = run_ensemble(sys, std::nullopt, 3, kSeed, sys.horizon).realizations;
  for (auto& rz : attacked_ensemble(sys, plan, 3).realizations) runs.push_back(std::move(rz));

  DetectorConfig plain;
  plain.window = kWindow;
  plain.kappa = 1;
  plain.use_G = false;
  DetectorConfig identity = plain;
  identity.use_G = true;
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(kWindow, kWindow);

  std::size_t q_checked = 0, q_equal = 0, nll_checked = 0, nll_equal = 0;
  for (const auto& rz : runs) {
    const auto base = detect_baseline(rz, sys, tables.V, kWindow, plain.threshold);
    const auto a = detect(rz, sys, tables, plain);
    const auto b = detect(rz, sys, tables, identity);
    for (Step n = a.first_valid_step; n < rz.steps(); ++n) {
      const Eigen::MatrixXd prev = baseline_window_statistic(rz, sys, tables.V, n, kWindow);
      const Eigen::MatrixXd P = window_psi(rz, sys, tables.V, 1, n, kWindow);
      const Eigen::MatrixXd q_plain = window_statistic(P);
      const Eigen::MatrixXd q_identity = window_statistic_factored(P, I);
      q_checked += 2;
      q_equal += (q_plain.array() == prev.array()).all();
      q_equal += (q_identity.array() == prev.array()).all();
      nll_checked += 2;
      nll_equal += a.nll[n] == base.nll[n];
      nll_equal += b.nll[n] == base.nll[n];
    }
  }
  std::ostringstream d;
  d << "kappa " << kappa << "; Q bit-identical " << q_equal << "/" << q_checked << ", NLL bit-identical "
    << nll_equal << "/" << nll_checked << " over " << runs.size() << " runs (3 replay-attacked)";
  return {kappa == 1 && q_equal == q_checked && nll_equal == nll_checked && q_checked > 0, d.str()};
}

struct Criterion {
  int id;
  const char* title;
  std::function<Outcome()> check;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ltvwm acceptance suite"};
  std::vector<int> only;
  app.add_option("--only", only, "run only these criteria (1-9)")->check(CLI::Range(1, 9));
  CLI11_PARSE(app, argc, argv);

  const std::vector<Criterion> criteria{
      {1, "kappa reproduction", criterion1},
      {2, "G_n removes anomalous realizations", criterion2},
      {3, "Wishart first moment", criterion3},
      {4, "asymptotic statistics", criterion4},
      {5, "zero-scaling attack leaves C1 null", criterion5},
      {6, "vehicle replay detection protocol", criterion6},
      {7, "Sigma_delta recursion and V_n whitening", criterion7},
      {8, "ensemble estimator convergence", criterion8},
      {9, "reduction to the single-delay test", criterion9},
  };

  bool all = true;
  for (const auto& c : criteria) {
    if (!only.empty() && std::find(only.begin(), only.end(), c.id) == only.end()) continue;
    Outcome o;
    try {
      o = c.check();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    all = all && o.pass;
    std::cout << "AC" << c.id << " " << (o.pass ? "PASS" : "FAIL") << "  " << c.title << ": " << o.detail
              << std::endl;
  }
  return all ? 0 : 1;
}
