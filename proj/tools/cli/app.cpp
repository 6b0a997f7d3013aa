#include "app.hpp"

#include <map>
#include <optional>
#include <ostream>

#include "CLI11.hpp"
#include "commands.hpp"
#include "ltvwm/errors.hpp"

namespace ltvwm::cli {

namespace {

// Command-line overrides, applied on top of defaults or the --config file.
struct Flags {
  std::string config;
  std::string scenario;
  Step horizon = 0;
  Step steps = 0;
  Step window = 0;
  std::string kappa;
  double rate = 0.0;
  std::size_t count = 0;
  std::uint64_t seed = 0;
  std::string attack;
  double attack_start = 0.0;
  double blend = 0.0;
  double alpha = 0.0;
  std::size_t runs = 0;
  std::string source;
  bool no_G = false;
  std::string out;
  std::size_t workers = 0;
  std::string tables;
  std::string param;
  std::vector<double> values;

  // the same flag is registered on several subcommands
  std::multimap<std::string, CLI::Option*> opts;

  void bind(const std::string& name, CLI::Option* opt) { opts.emplace(name, opt); }

  bool given(const std::string& name) const {
    auto [lo, hi] = opts.equal_range(name);
    for (auto it = lo; it != hi; ++it) {
      if (it->second->count() > 0) return true;
    }
    return false;
  }
};

void add_common(CLI::App& cmd, Flags& f) {
  f.bind("config", cmd.add_option("--config", f.config, "JSON experiment config")->check(CLI::ExistingFile));
  f.bind("scenario", cmd.add_option("--scenario", f.scenario, "example1, vehicle, or a system JSON file"));
  f.bind("horizon", cmd.add_option("--horizon", f.horizon, "example1 horizon in steps"));
  f.bind("steps", cmd.add_option("--steps", f.steps, "steps per realization (0 = horizon)"));
  f.bind("out", cmd.add_option("--out", f.out, "output directory"));
  f.bind("workers", cmd.add_option("--workers", f.workers, "worker threads (0 = all cores)"));
}

void add_detection(CLI::App& cmd, Flags& f) {
  f.bind("window", cmd.add_option("--window", f.window, "window length (ell + 1)"));
  f.bind("kappa", cmd.add_option("--kappa", f.kappa, "watermark delay, or auto"));
  f.bind("rate", cmd.add_option("--rate", f.rate, "false-alarm rate"));
  f.bind("count", cmd.add_option("--count", f.count, "calibration ensemble size"));
  f.bind("seed", cmd.add_option("--seed", f.seed, "base seed"));
  f.bind("source", cmd.add_option("--source", f.source, "table source: ensemble or analytic"));
  f.bind("no-G", cmd.add_flag("--no-G", f.no_G, "skip the autocorrelation normalization"));
}

void add_attack(CLI::App& cmd, Flags& f) {
  f.bind("attack", cmd.add_option("--attack", f.attack, "none, replay or generalized"));
  f.bind("attack-start", cmd.add_option("--attack-start", f.attack_start, "attack start in seconds"));
  f.bind("blend", cmd.add_option("--blend", f.blend, "replay blend duration in seconds"));
  f.bind("alpha", cmd.add_option("--alpha", f.alpha, "generalized attack scaling"));
  f.bind("runs", cmd.add_option("--runs", f.runs, "number of attacked runs"));
}

ExperimentConfig resolve(const Flags& f) {
  ExperimentConfig cfg = f.given("config") ? load_config(f.config) : ExperimentConfig{};
  if (f.given("scenario")) cfg.scenario = f.scenario;
  if (f.given("horizon")) cfg.horizon = f.horizon;
  if (f.given("steps")) cfg.steps = f.steps;
  if (f.given("out")) cfg.output_dir = f.out;
  if (f.given("workers")) cfg.workers = f.workers;
  if (f.given("window")) cfg.window = f.window;
  if (f.given("kappa")) {
    if (f.kappa == "auto") {
      cfg.kappa = 0;
    } else {
      try {
        cfg.kappa = std::stoi(f.kappa);
      } catch (const std::exception&) {
        throw UsageError("--kappa must be auto or an integer");
      }
    }
  }
  if (f.given("rate")) cfg.false_alarm_rate = f.rate;
  if (f.given("count")) cfg.ensemble_count = f.count;
  if (f.given("seed")) cfg.base_seed = f.seed;
  if (f.given("source")) {
    if (f.source == "ensemble") cfg.table_source = TableSource::ensemble;
    else if (f.source == "analytic") cfg.table_source = TableSource::analytic;
    else throw UsageError("--source must be ensemble or analytic");
  }
  if (f.no_G) cfg.use_G = false;
  if (f.given("attack")) cfg.attack.mode = attack_choice(f.attack);
  if (f.given("attack-start")) cfg.attack.start_s = f.attack_start;
  if (f.given("blend")) cfg.attack.blend_s = f.blend;
  if (f.given("alpha")) cfg.attack.alpha = f.alpha;
  if (f.given("runs")) cfg.attack.runs = f.runs;
  if (f.given("param")) cfg.sweep.parameter = f.param;
  if (f.given("values")) cfg.sweep.values = f.values;
  check_config(cfg);
  return cfg;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Dynamic watermarking for linear time-varying systems"};
  app.require_subcommand(1);
  Flags f;

  auto* calibrate = app.add_subcommand("calibrate", "build normalization tables and the alarm threshold");
  add_common(*calibrate, f);
  add_detection(*calibrate, f);

  auto* run = app.add_subcommand("run", "simulate and score runs against calibrated tables");
  add_common(*run, f);
  add_detection(*run, f);
  add_attack(*run, f);
  f.bind("tables", run->add_option("--tables", f.tables, "directory holding tables.bin and threshold.json"));

  auto* sweep = app.add_subcommand("sweep", "calibrate and run over a parameter grid");
  add_common(*sweep, f);
  add_detection(*sweep, f);
  add_attack(*sweep, f);
  f.bind("param", sweep->add_option("--param", f.param, "window, alpha, sigma_e_scale or false_alarm_rate"));
  f.bind("values", sweep->add_option("--values", f.values, "grid values")->delimiter(','));

  auto* kappa = app.add_subcommand("kappa", "report the watermark delay");
  add_common(*kappa, f);

  auto* validate = app.add_subcommand("validate", "check the stability and covariance assumptions");
  add_common(*validate, f);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    const ExperimentConfig cfg = resolve(f);
    if (calibrate->parsed()) return cmd_calibrate(cfg, out);
    if (run->parsed()) {
      std::optional<std::filesystem::path> tables;
      if (f.given("tables")) tables = f.tables;
      return cmd_run(cfg, tables, out);
    }
    if (sweep->parsed()) return cmd_sweep(cfg, out);
    if (kappa->parsed()) return cmd_kappa(cfg, out);
    if (validate->parsed()) return cmd_validate(cfg, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const FormatError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

}  // namespace ltvwm::cli
