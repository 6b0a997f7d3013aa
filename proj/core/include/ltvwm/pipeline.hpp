#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "ltvwm/detector.hpp"
#include "ltvwm/normalization.hpp"
#include "ltvwm/scenarios.hpp"
#include "ltvwm/simulate.hpp"

namespace ltvwm {

enum class TableSource { ensemble, analytic };

struct CalibrationOptions {
  std::size_t count = 200;
  std::uint64_t seed = 42;
  Step steps = 0;  ///< 0 = full horizon
  Step window = 20;
  int kappa = 0;   ///< 0 = compute_kappa
  double false_alarm_rate = 0.002;
  bool use_G = true;
  TableSource source = TableSource::ensemble;
  std::size_t workers = 0;
};

struct Calibration {
  NormalizationTables tables;
  double threshold = 0.0;
  std::size_t sample_count = 0;  ///< pooled NLL values behind the threshold
  DetectorConfig config;
};

/// Unattacked ensemble -> tables -> detection on the same ensemble -> pooled threshold.
Calibration calibrate(const SystemTrajectory& sys, const CalibrationOptions& options);

struct RunSummary {
  std::size_t runs = 0;
  std::size_t detected = 0;          ///< runs with an alarm at or after the attack start
  std::vector<Step> latencies;       ///< first alarm at/after start minus start, per detected run
  double pre_attack_alarm_fraction = 0.0;
  double post_attack_alarm_fraction = 0.0;
  double overall_alarm_fraction = 0.0;
};

/// First alarm at or after `from`, if any.
std::optional<Step> first_alarm_from(const DetectionReport& report, Step from);

RunSummary summarize(const std::vector<DetectionReport>& reports, Step attack_start);

struct ProtocolRun {
  ExperimentPlan plan;
  Calibration calibration;
  std::vector<DetectionReport> reports;
  RunSummary summary;
};

/// Executes an experiment plan end to end. Replay attacks play back unattacked recordings
/// from an independent ensemble, aligned step for step.
ProtocolRun run_protocol(const ScenarioBundle& bundle, const ExperimentPlan& plan, std::size_t workers = 0);

/// Attacked ensemble on the plan's seeds. In replay mode the sources are recorded first from an
/// independent unattacked ensemble.
EnsembleRun attacked_ensemble(const SystemTrajectory& sys, const ExperimentPlan& plan, std::size_t count,
                              std::size_t workers = 0);

}  // namespace ltvwm
