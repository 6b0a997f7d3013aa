#pragma once

#include <filesystem>

#include <nlohmann/json.hpp>

#include "ltvwm/detector.hpp"
#include "ltvwm/pipeline.hpp"

namespace ltvwm {

/// step,nll,threshold,alarm; nll is left empty before the first valid window.
void save_report_csv(const DetectionReport& report, const std::filesystem::path& path);
std::string report_csv(const DetectionReport& report);

/// first_alarm_step, alarm fraction, and the final running C1 / C2 deviations.
nlohmann::json report_summary(const DetectionReport& report);

/// Detection rate, latency distribution and alarm fractions over a batch of runs.
nlohmann::json run_summary_json(const RunSummary& summary);

}  // namespace ltvwm
