#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>

#include "config.hpp"

namespace ltvwm::cli {

/// Thrown for invalid command input that is caught before any work starts.
class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Each command returns the process exit code and writes human-readable progress to `out`.
// Files land in cfg.output_dir and are written atomically.

/// Unattacked ensemble -> tables.{bin,json} + threshold.json.
int cmd_calibrate(const ExperimentConfig& cfg, std::ostream& out);

/// Detection runs against previously calibrated tables (read from `tables_dir`, default output_dir):
/// runs/run_NNN.csv traces and summary.json.
int cmd_run(const ExperimentConfig& cfg, const std::optional<std::filesystem::path>& tables_dir, std::ostream& out);

/// One row per grid value in sweep.csv; failed points go to sweep_failures.json. Returns 1 if any point failed.
int cmd_sweep(const ExperimentConfig& cfg, std::ostream& out);

int cmd_kappa(const ExperimentConfig& cfg, std::ostream& out);

/// Returns 1 when the scenario violates the stability or covariance assumptions.
int cmd_validate(const ExperimentConfig& cfg, std::ostream& out);

}  // namespace ltvwm::cli
