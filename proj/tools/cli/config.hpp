#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ltvwm/pipeline.hpp"
#include "ltvwm/scenarios.hpp"

namespace ltvwm::cli {

enum class AttackChoice { none, replay, generalized };

struct AttackConfig {
  AttackChoice mode = AttackChoice::replay;
  double alpha = -1.0;
  double start_s = 50.0;
  double blend_s = 0.15;
  std::size_t runs = 20;
};

struct SweepConfig {
  std::string parameter;  ///< window, alpha, sigma_e_scale or false_alarm_rate
  std::vector<double> values;
};

/// Everything a command needs. Only fields that change results feed the config hash.
struct ExperimentConfig {
  std::string scenario = "example1";  ///< example1, vehicle, or a system JSON file
  Step horizon = 1000;                ///< example1 only
  std::string path_file;              ///< vehicle reference path CSV; empty = built-in course
  double duration_s = 100.0;          ///< vehicle only
  Step steps = 0;                     ///< 0 = scenario horizon
  Step window = 20;
  int kappa = 0;                      ///< 0 = auto
  double false_alarm_rate = 0.002;
  std::size_t ensemble_count = 200;
  TableSource table_source = TableSource::ensemble;
  bool use_G = true;
  std::uint64_t base_seed = 42;
  double sigma_e_scale = 1.0;
  AttackConfig attack;
  SweepConfig sweep;

  // execution only, excluded from the hash
  std::filesystem::path output_dir = "ltvwm-out";
  std::size_t workers = 0;
};

/// Throws FormatError on unknown keys, wrong types or out-of-range values.
ExperimentConfig config_from_json(const nlohmann::json& j, ExperimentConfig base = {});
ExperimentConfig load_config(const std::filesystem::path& file);

/// Result-relevant fields in canonical form.
nlohmann::json config_to_json(const ExperimentConfig& cfg);
std::string experiment_hash(const ExperimentConfig& cfg);

/// Range checks that do not need the scenario.
void check_config(const ExperimentConfig& cfg);

ScenarioBundle build_scenario(const ExperimentConfig& cfg);

CalibrationOptions calibration_options(const ExperimentConfig& cfg);
ProtocolOptions protocol_options(const ExperimentConfig& cfg);

std::string to_string(AttackChoice mode);
AttackChoice attack_choice(const std::string& name);

}  // namespace ltvwm::cli
