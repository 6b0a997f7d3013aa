#include "ltvwm/pipeline.hpp"

#include <memory>
#include <stdexcept>

#include "ltvwm/parallel.hpp"

namespace ltvwm {

Calibration calibrate(const SystemTrajectory& sys, const CalibrationOptions& options) {
  const Step steps = options.steps > 0 ? options.steps : sys.horizon;
  Calibration cal;
  cal.config.window = options.window;
  cal.config.kappa = options.kappa > 0 ? options.kappa : compute_kappa(sys, sys.horizon);
  cal.config.use_G = options.use_G;
  cal.config.false_alarm_rate = options.false_alarm_rate;
  validate_config(cal.config, sys.q(), sys.r());

  EnsembleOptions eo;
  eo.workers = options.workers;
  const EnsembleRun ensemble = run_ensemble(sys, std::nullopt, options.count, options.seed, steps, eo);
  TableOptions to;
  to.window = cal.config.window;
  to.kappa = cal.config.kappa;
  to.with_G = options.use_G;
  to.workers = options.workers;
  cal.tables = options.source == TableSource::ensemble ? build_ensemble_tables(sys, ensemble, to)
                                                       : build_analytic_tables(sys, steps, to);
  const std::vector<DetectionReport> reports = detect_all(ensemble.realizations, sys, cal.tables, cal.config,
                                                          options.workers);
  const std::vector<double> pooled = pooled_nll(reports);
  cal.sample_count = pooled.size();
  cal.threshold = calibrate_threshold(pooled, options.false_alarm_rate);
  cal.config.threshold = cal.threshold;
  return cal;
}

std::optional<Step> first_alarm_from(const DetectionReport& report, Step from) {
  for (Step n = std::max<Step>(from, 0); n < report.steps(); ++n) {
    if (report.alarms[static_cast<std::size_t>(n)]) return n;
  }
  return std::nullopt;
}

RunSummary summarize(const std::vector<DetectionReport>& reports, Step attack_start) {
  RunSummary s;
  s.runs = reports.size();
  std::size_t pre_alarms = 0, pre_steps = 0, post_alarms = 0, post_steps = 0;
  for (const auto& rep : reports) {
    const Step first = rep.first_valid_step;
    const Step split = std::max(attack_start, first);
    pre_alarms += rep.alarm_count(first, split);
    pre_steps += static_cast<std::size_t>(std::max<Step>(0, split - first));
    post_alarms += rep.alarm_count(split, rep.steps());
    post_steps += static_cast<std::size_t>(std::max<Step>(0, rep.steps() - split));
    if (auto hit = first_alarm_from(rep, attack_start)) {
      ++s.detected;
      s.latencies.push_back(*hit - attack_start);
    }
  }
  auto frac = [](std::size_t a, std::size_t b) { return b ? static_cast<double>(a) / static_cast<double>(b) : 0.0; };
  s.pre_attack_alarm_fraction = frac(pre_alarms, pre_steps);
  s.post_attack_alarm_fraction = frac(post_alarms, post_steps);
  s.overall_alarm_fraction = frac(pre_alarms + post_alarms, pre_steps + post_steps);
  return s;
}

EnsembleRun attacked_ensemble(const SystemTrajectory& sys, const ExperimentPlan& plan, std::size_t count,
                              std::size_t workers) {
  EnsembleOptions eo;
  eo.workers = workers;
  const ProtocolOptions& opt = plan.options;
  AttackSpec base;
  base.mode = opt.mode;
  base.alpha = opt.alpha;
  base.start_step = plan.start_step;
  base.blend_duration = opt.blend_s;
  if (opt.mode == AttackMode::generalized) {
    base.sigma_omega = {sys.sigma_w.front()};
    base.sigma_zeta = {sys.sigma_z.front()};
    return run_ensemble(sys, base, count, plan.attacked_seed, plan.steps, eo);
  }

  const EnsembleRun recordings = run_ensemble(sys, std::nullopt, count, plan.recording_seed, plan.steps, eo);
  EnsembleRun out;
  out.realizations.resize(count);
  out.seeds.resize(count);
  out.sys_fingerprint = fingerprint(sys);
  out.base_seed = plan.attacked_seed;
  out.attacked = true;
  const Simulator sim(sys, plan.steps);
  parallel_for(count, workers, [&](std::size_t j) {
    AttackSpec spec = base;
    spec.replay_source = std::make_shared<const Realization>(recordings.realizations[j]);
    out.seeds[j] = realization_seed(plan.attacked_seed, j);
    out.realizations[j] = sim.run(spec, out.seeds[j]);
  });
  return out;
}

ProtocolRun run_protocol(const ScenarioBundle& bundle, const ExperimentPlan& plan, std::size_t workers) {
  const SystemTrajectory& sys = bundle.sys;
  if (fingerprint(sys) != plan.sys_fingerprint) throw std::invalid_argument("plan was made for another system");
  ProtocolRun run;
  run.plan = plan;
  CalibrationOptions co;
  co.count = plan.options.calibration_count;
  co.seed = plan.calibration_seed;
  co.steps = plan.steps;
  co.window = plan.options.window;
  co.kappa = plan.kappa;
  co.false_alarm_rate = plan.options.false_alarm_rate;
  co.use_G = plan.options.use_G;
  co.workers = workers;
  run.calibration = calibrate(sys, co);
  const EnsembleRun attacked = attacked_ensemble(sys, plan, plan.options.attacked_count, workers);
  run.reports = detect_all(attacked.realizations, sys, run.calibration.tables, run.calibration.config, workers);
  run.summary = summarize(run.reports, plan.start_step);
  return run;
}

}  // namespace ltvwm
