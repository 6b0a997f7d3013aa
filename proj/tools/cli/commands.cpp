#include "commands.hpp"

#include <algorithm>
#include <cstdio>
#include <ostream>
#include <sstream>

#include "ltvwm/errors.hpp"
#include "ltvwm/file_util.hpp"
#include "ltvwm/linalg.hpp"
#include "ltvwm/report_io.hpp"
#include "ltvwm/tables_io.hpp"

namespace ltvwm::cli {

namespace {

constexpr const char* kThresholdSchema = "ltvwm.threshold/1";
constexpr const char* kRunSchema = "ltvwm.run/1";

void write_json(const std::filesystem::path& file, const nlohmann::json& j) { atomic_write(file, j.dump(2) + "\n"); }

nlohmann::json read_json(const std::filesystem::path& file) {
  try {
    return nlohmann::json::parse(read_file(file));
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(file.string() + ": " + e.what());
  }
}

std::string run_name(std::size_t j) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "run_%03zu.csv", j);
  return buf;
}

std::optional<double> median(std::vector<Step> xs) {
  if (xs.empty()) return std::nullopt;
  std::sort(xs.begin(), xs.end());
  const std::size_t m = xs.size() / 2;
  return xs.size() % 2 ? static_cast<double>(xs[m]) : 0.5 * static_cast<double>(xs[m - 1] + xs[m]);
}

struct Detection {
  ExperimentPlan plan;
  EnsembleRun runs;
  std::vector<DetectionReport> reports;
  RunSummary summary;
  Step attack_start = 0;
};

// Attacked (or clean) runs scored against a fixed calibration.
Detection detect_runs(const ExperimentConfig& cfg, const ScenarioBundle& bundle, const NormalizationTables& tables,
                      const DetectorConfig& dc) {
  ProtocolOptions po = protocol_options(cfg);
  po.window = dc.window;
  po.kappa = dc.kappa;
  Detection d;
  d.plan = experiment_protocol(bundle, po);
  const SystemTrajectory& sys = bundle.sys;
  if (cfg.attack.mode == AttackChoice::none) {
    EnsembleOptions eo;
    eo.workers = cfg.workers;
    d.runs = run_ensemble(sys, std::nullopt, cfg.attack.runs, d.plan.attacked_seed, d.plan.steps, eo);
    d.attack_start = d.plan.steps;
  } else {
    d.runs = attacked_ensemble(sys, d.plan, cfg.attack.runs, cfg.workers);
    d.attack_start = d.plan.start_step;
  }
  d.reports = detect_all(d.runs.realizations, sys, tables, dc, cfg.workers);
  d.summary = summarize(d.reports, d.attack_start);
  return d;
}

nlohmann::json threshold_json(const ExperimentConfig& cfg, const Calibration& cal, std::uint64_t fp) {
  return {{"schema", kThresholdSchema},
          {"config_hash", experiment_hash(cfg)},
          {"system_fingerprint", fingerprint_hex(fp)},
          {"threshold", cal.threshold},
          {"false_alarm_rate", cal.config.false_alarm_rate},
          {"sample_count", cal.sample_count},
          {"ensemble_count", cfg.ensemble_count},
          {"window", cal.config.window},
          {"kappa", cal.config.kappa},
          {"use_G", cal.config.use_G}};
}

double mean_of(const std::vector<nlohmann::json>& summaries, const char* key) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& s : summaries) {
    if (s.contains(key) && s[key].is_number()) {
      sum += s[key].get<double>();
      ++n;
    }
  }
  return n ? sum / static_cast<double>(n) : 0.0;
}

void apply_sweep_value(ExperimentConfig& cfg, const std::string& parameter, double value) {
  if (parameter == "window") {
    if (value != std::floor(value) || value < 1) throw UsageError("window values must be positive integers");
    cfg.window = static_cast<Step>(value);
  } else if (parameter == "alpha") {
    cfg.attack.alpha = value;
    cfg.attack.mode = AttackChoice::generalized;
  } else if (parameter == "sigma_e_scale") {
    cfg.sigma_e_scale = value;
  } else if (parameter == "false_alarm_rate") {
    cfg.false_alarm_rate = value;
  } else {
    throw UsageError("sweep parameter must be window, alpha, sigma_e_scale or false_alarm_rate, got '" + parameter +
                     "'");
  }
  check_config(cfg);
}

}  // namespace

int cmd_calibrate(const ExperimentConfig& cfg, std::ostream& out) {
  const ScenarioBundle bundle = build_scenario(cfg);
  const std::uint64_t fp = fingerprint(bundle.sys);
  const Calibration cal = calibrate(bundle.sys, calibration_options(cfg));

  const auto dir = cfg.output_dir;
  nlohmann::json manifest = save_tables(cal.tables, dir / "tables");
  manifest["config_hash"] = experiment_hash(cfg);
  write_json(dir / "tables.json", manifest);
  write_json(dir / "threshold.json", threshold_json(cfg, cal, fp));
  write_json(dir / "config.json", config_to_json(cfg));

  out << "scenario   " << cfg.scenario << " (" << fingerprint_hex(fp) << ")\n"
      << "kappa      " << cal.config.kappa << "\n"
      << "window     " << cal.config.window << "\n"
      << "ensemble   " << cfg.ensemble_count << " realizations, " << cal.tables.steps() << " steps\n"
      << "threshold  " << cal.threshold << " at rate " << cal.config.false_alarm_rate << " (" << cal.sample_count
      << " samples)\n";
  for (const auto& w : cal.tables.warnings) out << "warning    " << w << "\n";
  out << "wrote      " << (dir / "tables.bin").string() << ", threshold.json\n";
  return 0;
}

int cmd_run(const ExperimentConfig& cfg, const std::optional<std::filesystem::path>& tables_dir, std::ostream& out) {
  const ScenarioBundle bundle = build_scenario(cfg);
  const std::uint64_t fp = fingerprint(bundle.sys);
  const auto source = tables_dir.value_or(cfg.output_dir);
  const NormalizationTables tables = load_tables(source / "tables");
  if (tables.sys_fingerprint != fp) {
    throw FingerprintMismatch("tables in " + source.string() + " were built for system " +
                              fingerprint_hex(tables.sys_fingerprint) + ", scenario is " + fingerprint_hex(fp));
  }
  const nlohmann::json thr = read_json(source / "threshold.json");
  if (thr.value("schema", "") != kThresholdSchema) throw FormatError("threshold.json has an unexpected schema");
  if (thr.value("system_fingerprint", "") != fingerprint_hex(fp)) {
    throw FingerprintMismatch("threshold.json was calibrated on another system");
  }

  DetectorConfig dc;
  dc.window = tables.window;
  dc.kappa = tables.kappa;
  dc.threshold = thr.at("threshold").get<double>();
  dc.false_alarm_rate = thr.at("false_alarm_rate").get<double>();
  dc.use_G = thr.at("use_G").get<bool>() && tables.has_G();
  if (cfg.window != dc.window) {
    throw UsageError("tables were calibrated with window " + std::to_string(dc.window) + ", config asks for " +
                     std::to_string(cfg.window));
  }

  const Detection d = detect_runs(cfg, bundle, tables, dc);
  const auto dir = cfg.output_dir;
  nlohmann::json runs = nlohmann::json::array();
  for (std::size_t j = 0; j < d.reports.size(); ++j) {
    const std::string name = run_name(j);
    save_report_csv(d.reports[j], dir / "runs" / name);
    auto s = report_summary(d.reports[j]);
    s["file"] = "runs/" + name;
    s["seed"] = d.runs.seeds[j];
    runs.push_back(std::move(s));
  }
  nlohmann::json summary = {{"schema", kRunSchema},
                            {"config_hash", experiment_hash(cfg)},
                            {"system_fingerprint", fingerprint_hex(fp)},
                            {"tables_config_hash", thr.value("config_hash", "")},
                            {"attack", to_string(cfg.attack.mode)},
                            {"threshold", dc.threshold},
                            {"window", dc.window},
                            {"kappa", dc.kappa},
                            {"plan", d.plan.manifest()},
                            {"summary", run_summary_json(d.summary)},
                            {"runs", runs}};
  if (cfg.attack.mode != AttackChoice::none) {
    summary["attack_start_step"] = d.plan.start_step;
    summary["blend_end_step"] = d.plan.blend_end_step();
  }
  write_json(dir / "summary.json", summary);

  out << "runs       " << d.summary.runs << " (" << to_string(cfg.attack.mode) << ")\n";
  if (cfg.attack.mode != AttackChoice::none) {
    out << "detected   " << d.summary.detected << " / " << d.summary.runs << "\n";
    if (auto m = median(d.summary.latencies)) out << "latency    median " << *m << " steps after attack start\n";
    out << "pre-attack alarm fraction  " << d.summary.pre_attack_alarm_fraction << "\n"
        << "post-attack alarm fraction " << d.summary.post_attack_alarm_fraction << "\n";
  } else {
    out << "alarm fraction " << d.summary.overall_alarm_fraction << " (target " << dc.false_alarm_rate << ")\n";
  }
  out << "wrote      " << (dir / "summary.json").string() << "\n";
  return 0;
}

int cmd_sweep(const ExperimentConfig& cfg, std::ostream& out) {
  const SweepConfig& sweep = cfg.sweep;
  if (sweep.parameter.empty()) throw UsageError("sweep needs a parameter");
  if (sweep.values.empty()) throw UsageError("sweep grid is empty");
  for (double v : sweep.values) {
    ExperimentConfig probe = cfg;
    apply_sweep_value(probe, sweep.parameter, v);
  }

  std::ostringstream csv;
  csv << "parameter,value,attack,runs,detected,detection_rate,median_latency,pre_attack_alarm_fraction,"
         "post_attack_alarm_fraction,threshold,c1_norm_mean,c2_deviation_mean\n";
  nlohmann::json failures = nlohmann::json::array();
  std::optional<Calibration> shared;  // alpha does not affect calibration

  for (double v : sweep.values) {
    ExperimentConfig point = cfg;
    apply_sweep_value(point, sweep.parameter, v);
    try {
      const ScenarioBundle bundle = build_scenario(point);
      Calibration cal;
      if (sweep.parameter == "alpha" && shared) {
        cal = *shared;
      } else {
        cal = calibrate(bundle.sys, calibration_options(point));
        if (sweep.parameter == "alpha") shared = cal;
      }
      const Detection d = detect_runs(point, bundle, cal.tables, cal.config);
      std::vector<nlohmann::json> summaries;
      for (const auto& r : d.reports) summaries.push_back(report_summary(r));
      const auto med = median(d.summary.latencies);
      csv << sweep.parameter << ',' << v << ',' << to_string(point.attack.mode) << ',' << d.summary.runs << ','
          << d.summary.detected << ',' << static_cast<double>(d.summary.detected) / static_cast<double>(d.summary.runs)
          << ',' << (med ? std::to_string(*med) : std::string()) << ',' << d.summary.pre_attack_alarm_fraction << ','
          << d.summary.post_attack_alarm_fraction << ',' << cal.threshold << ',' << mean_of(summaries, "c1_norm")
          << ',' << mean_of(summaries, "c2_deviation") << '\n';
      out << sweep.parameter << " = " << v << ": detected " << d.summary.detected << " / " << d.summary.runs << "\n";
    } catch (const std::exception& e) {
      failures.push_back({{"value", v}, {"error", e.what()}});
      out << sweep.parameter << " = " << v << ": failed: " << e.what() << "\n";
    }
  }

  const auto dir = cfg.output_dir;
  atomic_write(dir / "sweep.csv", csv.str());
  write_json(dir / "sweep_manifest.json", {{"config_hash", experiment_hash(cfg)},
                                           {"config", config_to_json(cfg)},
                                           {"points", sweep.values.size()},
                                           {"failed", failures.size()}});
  if (!failures.empty()) {
    write_json(dir / "sweep_failures.json", {{"config_hash", experiment_hash(cfg)}, {"failures", failures}});
    out << failures.size() << " of " << sweep.values.size() << " grid points failed; see sweep_failures.json\n";
    return 1;
  }
  std::filesystem::remove(dir / "sweep_failures.json");
  out << "wrote      " << (dir / "sweep.csv").string() << "\n";
  return 0;
}

int cmd_kappa(const ExperimentConfig& cfg, std::ostream& out) {
  const ScenarioBundle bundle = build_scenario(cfg);
  const SystemTrajectory& sys = bundle.sys;
  const int kappa = compute_kappa(sys, sys.horizon);
  out << "kappa " << kappa << "\n";
  for (int k = 1; k <= static_cast<int>(sys.p()); ++k) {
    out << "  delay " << k << "  |avg C Abar B| = " << linalg::spectral_norm(kappa_average(sys, sys.horizon, k))
        << "\n";
  }
  return 0;
}

int cmd_validate(const ExperimentConfig& cfg, std::ostream& out) {
  const ScenarioBundle bundle = build_scenario(cfg);
  const ValidationReport rep = validate_system(bundle.sys);
  out << "horizon                  " << bundle.sys.horizon << "\n"
      << "max radius A+BK          " << rep.max_radius_Abar << "\n"
      << "max radius A+LC          " << rep.max_radius_Aunderline << "\n"
      << "max 2-norm A+BK          " << rep.max_norm_Abar << "\n"
      << "max 2-norm A+LC          " << rep.max_norm_Aunderline << "\n"
      << "min covariance eigenvalue " << rep.min_covariance_eigenvalue << "\n";
  if (rep.ok()) {
    out << "ok\n";
    return 0;
  }
  const std::size_t shown = std::min<std::size_t>(rep.violations.size(), 20);
  for (std::size_t i = 0; i < shown; ++i) {
    const auto& v = rep.violations[i];
    out << "violation  assumption " << v.assumption << " at step " << v.step << ": " << v.what << " (" << v.value
        << ")\n";
  }
  if (shown < rep.violations.size()) out << "... " << rep.violations.size() - shown << " more\n";
  return 1;
}

}  // namespace ltvwm::cli
