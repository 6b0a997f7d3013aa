#include "ltvwm/report_io.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "ltvwm/file_util.hpp"
#include "ltvwm/linalg.hpp"

namespace ltvwm {

std::string report_csv(const DetectionReport& report) {
  std::ostringstream out;
  out.precision(17);
  out << "step,nll,threshold,alarm\n";
  for (Step n = 0; n < report.steps(); ++n) {
    const double v = report.nll[static_cast<std::size_t>(n)];
    out << n << ',';
    if (std::isfinite(v)) out << v;
    out << ',' << report.threshold << ',' << static_cast<int>(report.alarms[static_cast<std::size_t>(n)]) << '\n';
  }
  return out.str();
}

void save_report_csv(const DetectionReport& report, const std::filesystem::path& path) {
  atomic_write(path, report_csv(report));
}

nlohmann::json report_summary(const DetectionReport& report) {
  nlohmann::json j;
  j["steps"] = report.steps();
  j["first_valid_step"] = report.first_valid_step;
  j["threshold"] = report.threshold;
  j["first_alarm_step"] = report.first_alarm_step ? nlohmann::json(*report.first_alarm_step) : nlohmann::json();
  j["alarm_fraction"] = report.alarm_fraction(0, report.steps());
  j["regularized_steps"] = report.regularized_steps;
  if (!report.c1_running.empty()) {
    const Eigen::MatrixXd& c1 = report.c1_running.back();
    const Eigen::MatrixXd& c2 = report.c2_running.back();
    j["c1_norm"] = linalg::spectral_norm(c1);
    j["c2_deviation"] = linalg::spectral_norm(c2 - Eigen::MatrixXd::Identity(c2.rows(), c2.cols()));
  }
  return j;
}

nlohmann::json run_summary_json(const RunSummary& s) {
  nlohmann::json j;
  j["runs"] = s.runs;
  j["detected"] = s.detected;
  j["detection_rate"] = s.runs ? static_cast<double>(s.detected) / static_cast<double>(s.runs) : 0.0;
  std::vector<Step> lat = s.latencies;
  std::sort(lat.begin(), lat.end());
  j["latency_steps"] = lat;
  if (!lat.empty()) {
    j["latency_min"] = lat.front();
    j["latency_median"] = lat[lat.size() / 2];
    j["latency_max"] = lat.back();
  }
  j["pre_attack_alarm_fraction"] = s.pre_attack_alarm_fraction;
  j["post_attack_alarm_fraction"] = s.post_attack_alarm_fraction;
  j["overall_alarm_fraction"] = s.overall_alarm_fraction;
  return j;
}

}  // namespace ltvwm
