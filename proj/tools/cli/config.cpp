#include "config.hpp"

#include <cmath>
#include <set>

#include "ltvwm/errors.hpp"
#include "ltvwm/file_util.hpp"
#include "ltvwm/rng.hpp"
#include "ltvwm/system_json.hpp"

namespace ltvwm::cli {

namespace {

const std::set<std::string> kTopKeys{"scenario",     "horizon",        "path_file",     "duration_s", "steps",
                                     "window",       "kappa",          "false_alarm_rate", "ensemble_count",
                                     "table_source", "use_G",          "base_seed",     "sigma_e_scale",
                                     "attack",       "sweep",          "output_dir",    "workers"};
const std::set<std::string> kAttackKeys{"mode", "alpha", "start_s", "blend_s", "runs"};
const std::set<std::string> kSweepKeys{"parameter", "values"};

void reject_unknown(const nlohmann::json& j, const std::set<std::string>& known, const std::string& where) {
  if (!j.is_object()) throw FormatError(where + " must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (!known.contains(key)) throw FormatError("unknown key '" + key + "' in " + where);
  }
}

template <typename T>
void read(const nlohmann::json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw FormatError(std::string("config key '") + key + "' has the wrong type");
  }
}

}  // namespace

std::string to_string(AttackChoice mode) {
  switch (mode) {
    case AttackChoice::none: return "none";
    case AttackChoice::replay: return "replay";
    case AttackChoice::generalized: return "generalized";
  }
  return "none";
}

AttackChoice attack_choice(const std::string& name) {
  if (name == "none") return AttackChoice::none;
  if (name == "replay") return AttackChoice::replay;
  if (name == "generalized") return AttackChoice::generalized;
  throw FormatError("attack mode must be none, replay or generalized, got '" + name + "'");
}

ExperimentConfig config_from_json(const nlohmann::json& j, ExperimentConfig cfg) {
  reject_unknown(j, kTopKeys, "config");
  read(j, "scenario", cfg.scenario);
  read(j, "horizon", cfg.horizon);
  read(j, "path_file", cfg.path_file);
  read(j, "duration_s", cfg.duration_s);
  read(j, "steps", cfg.steps);
  read(j, "window", cfg.window);
  if (j.contains("kappa")) {
    const auto& k = j["kappa"];
    if (k.is_string() && k.get<std::string>() == "auto") {
      cfg.kappa = 0;
    } else if (k.is_number_integer()) {
      cfg.kappa = k.get<int>();
    } else {
      throw FormatError("kappa must be \"auto\" or an integer");
    }
  }
  read(j, "false_alarm_rate", cfg.false_alarm_rate);
  read(j, "ensemble_count", cfg.ensemble_count);
  if (j.contains("table_source")) {
    std::string s;
    read(j, "table_source", s);
    if (s == "ensemble") cfg.table_source = TableSource::ensemble;
    else if (s == "analytic") cfg.table_source = TableSource::analytic;
    else throw FormatError("table_source must be ensemble or analytic");
  }
  read(j, "use_G", cfg.use_G);
  read(j, "base_seed", cfg.base_seed);
  read(j, "sigma_e_scale", cfg.sigma_e_scale);
  if (j.contains("attack")) {
    const auto& a = j["attack"];
    reject_unknown(a, kAttackKeys, "attack");
    if (a.contains("mode")) {
      std::string m;
      read(a, "mode", m);
      cfg.attack.mode = attack_choice(m);
    }
    read(a, "alpha", cfg.attack.alpha);
    read(a, "start_s", cfg.attack.start_s);
    read(a, "blend_s", cfg.attack.blend_s);
    read(a, "runs", cfg.attack.runs);
  }
  if (j.contains("sweep")) {
    const auto& s = j["sweep"];
    reject_unknown(s, kSweepKeys, "sweep");
    read(s, "parameter", cfg.sweep.parameter);
    read(s, "values", cfg.sweep.values);
  }
  if (j.contains("output_dir")) {
    std::string dir;
    read(j, "output_dir", dir);
    cfg.output_dir = dir;
  }
  read(j, "workers", cfg.workers);
  check_config(cfg);
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& file) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file(file));
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError("config " + file.string() + ": " + e.what());
  }
  ExperimentConfig cfg = config_from_json(j);
  // relative paths inside a config file are relative to the file
  const auto base = file.parent_path();
  if (!cfg.path_file.empty() && std::filesystem::path(cfg.path_file).is_relative()) {
    cfg.path_file = (base / cfg.path_file).string();
  }
  if (cfg.scenario != "example1" && cfg.scenario != "vehicle" && std::filesystem::path(cfg.scenario).is_relative()) {
    cfg.scenario = (base / cfg.scenario).string();
  }
  return cfg;
}

nlohmann::json config_to_json(const ExperimentConfig& cfg) {
  nlohmann::json j;
  j["scenario"] = cfg.scenario;
  if (cfg.scenario == "example1") j["horizon"] = cfg.horizon;
  if (cfg.scenario == "vehicle") {
    j["path_file"] = cfg.path_file;
    j["duration_s"] = cfg.duration_s;
  }
  j["steps"] = cfg.steps;
  j["window"] = cfg.window;
  j["kappa"] = cfg.kappa > 0 ? nlohmann::json(cfg.kappa) : nlohmann::json("auto");
  j["false_alarm_rate"] = cfg.false_alarm_rate;
  j["ensemble_count"] = cfg.ensemble_count;
  j["table_source"] = cfg.table_source == TableSource::ensemble ? "ensemble" : "analytic";
  j["use_G"] = cfg.use_G;
  j["base_seed"] = cfg.base_seed;
  j["sigma_e_scale"] = cfg.sigma_e_scale;
  j["attack"] = {{"mode", to_string(cfg.attack.mode)},
                 {"alpha", cfg.attack.alpha},
                 {"start_s", cfg.attack.start_s},
                 {"blend_s", cfg.attack.blend_s},
                 {"runs", cfg.attack.runs}};
  if (!cfg.sweep.parameter.empty()) j["sweep"] = {{"parameter", cfg.sweep.parameter}, {"values", cfg.sweep.values}};
  return j;
}

std::string experiment_hash(const ExperimentConfig& cfg) { return config_hash(config_to_json(cfg)); }

void check_config(const ExperimentConfig& cfg) {
  if (cfg.scenario.empty()) throw FormatError("scenario must not be empty");
  if (cfg.horizon < 1) throw FormatError("horizon must be >= 1");
  if (!(cfg.duration_s > 0.0)) throw FormatError("duration_s must be positive");
  if (cfg.steps < 0) throw FormatError("steps must be >= 0");
  if (cfg.window < 1) throw FormatError("window must be >= 1");
  if (cfg.kappa < 0) throw FormatError("kappa must be auto or positive");
  if (!(cfg.false_alarm_rate > 0.0 && cfg.false_alarm_rate < 1.0)) throw FormatError("false_alarm_rate must lie in (0, 1)");
  if (cfg.ensemble_count < 1) throw FormatError("ensemble_count must be >= 1");
  if (!(cfg.sigma_e_scale > 0.0) || !std::isfinite(cfg.sigma_e_scale)) throw FormatError("sigma_e_scale must be positive");
  if (!std::isfinite(cfg.attack.alpha)) throw FormatError("attack alpha must be finite");
  if (!(cfg.attack.blend_s >= 0.0)) throw FormatError("attack blend_s must be >= 0");
  if (cfg.attack.runs < 1) throw FormatError("attack runs must be >= 1");
}

ScenarioBundle build_scenario(const ExperimentConfig& cfg) {
  ScenarioBundle bundle;
  if (cfg.scenario == "example1") {
    bundle = example1_system(cfg.horizon);
  } else if (cfg.scenario == "vehicle") {
    const ReferencePath path = cfg.path_file.empty() ? default_reference_path() : load_path_csv(cfg.path_file, 0.05);
    VehicleConfig vc;
    vc.duration_s = cfg.duration_s;
    bundle = vehicle_scenario(path, vc);
  } else {
    bundle.sys = load_system(cfg.scenario);
    bundle.notes = "custom system from " + cfg.scenario;
  }
  if (cfg.sigma_e_scale != 1.0) bundle.sys.sigma_e *= cfg.sigma_e_scale;
  return bundle;
}

CalibrationOptions calibration_options(const ExperimentConfig& cfg) {
  CalibrationOptions co;
  co.count = cfg.ensemble_count;
  co.seed = derive_seed(cfg.base_seed, kCalibrationStream);
  co.steps = cfg.steps;
  co.window = cfg.window;
  co.kappa = cfg.kappa;
  co.false_alarm_rate = cfg.false_alarm_rate;
  co.use_G = cfg.use_G;
  co.source = cfg.table_source;
  co.workers = cfg.workers;
  return co;
}

ProtocolOptions protocol_options(const ExperimentConfig& cfg) {
  ProtocolOptions po;
  po.attack_start_s = cfg.attack.start_s;
  po.blend_s = cfg.attack.blend_s;
  po.calibration_count = cfg.ensemble_count;
  po.attacked_count = cfg.attack.runs;
  po.base_seed = cfg.base_seed;
  po.window = cfg.window;
  po.kappa = cfg.kappa;
  po.false_alarm_rate = cfg.false_alarm_rate;
  po.use_G = cfg.use_G;
  po.mode = cfg.attack.mode == AttackChoice::generalized ? AttackMode::generalized : AttackMode::replay;
  po.alpha = cfg.attack.alpha;
  po.steps = cfg.steps;
  return po;
}

}  // namespace ltvwm::cli
