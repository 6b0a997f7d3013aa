#include <benchmark/benchmark.h>

#include <optional>

#include "ltvwm/detector.hpp"
#include "ltvwm/normalization.hpp"
#include "ltvwm/scenarios.hpp"
#include "ltvwm/simulate.hpp"

using namespace ltvwm;

namespace {

const SystemTrajectory& example1() {
  static const SystemTrajectory sys = example1_system(10000).sys;
  return sys;
}

const SystemTrajectory& vehicle() {
  static const SystemTrajectory sys = vehicle_scenario(default_reference_path()).sys;
  return sys;
}

void BM_SimulateExample1(benchmark::State& state) {
  const Step steps = state.range(0);
  const Simulator sim(example1(), steps);
  std::uint64_t seed = 1;
  for (auto _ : state) benchmark::DoNotOptimize(sim.run(std::nullopt, seed++));
  state.SetItemsProcessed(state.iterations() * steps);
}
BENCHMARK(BM_SimulateExample1)->Arg(1000)->Arg(10000)->Unit(benchmark::kMillisecond);

void BM_ReplayVehicle(benchmark::State& state) {
  const auto& sys = vehicle();
  const Simulator sim(sys, sys.horizon);
  AttackSpec spec;
  spec.mode = AttackMode::replay;
  spec.start_step = sys.horizon / 2;
  spec.blend_duration = 0.15;
  spec.replay_source = std::make_shared<const Realization>(sim.run(std::nullopt, 99));
  std::uint64_t seed = 1;
  for (auto _ : state) benchmark::DoNotOptimize(sim.run(spec, seed++));
  state.SetItemsProcessed(state.iterations() * sys.horizon);
}
BENCHMARK(BM_ReplayVehicle)->Unit(benchmark::kMillisecond);

void BM_AnalyticTables(benchmark::State& state) {
  const Step steps = state.range(0);
  TableOptions to;
  to.kappa = 2;
  to.workers = 1;
  for (auto _ : state) benchmark::DoNotOptimize(build_analytic_tables(example1(), steps, to));
  state.SetItemsProcessed(state.iterations() * steps);
}
BENCHMARK(BM_AnalyticTables)->Arg(1000)->Arg(10000)->Unit(benchmark::kMillisecond);

void BM_EnsembleTables(benchmark::State& state) {
  const auto& sys = vehicle();
  EnsembleOptions eo;
  eo.workers = 1;
  const EnsembleRun ens = run_ensemble(sys, std::nullopt, static_cast<std::size_t>(state.range(0)), 7, sys.horizon, eo);
  TableOptions to;
  to.workers = 1;
  for (auto _ : state) benchmark::DoNotOptimize(build_ensemble_tables(sys, ens, to));
}
BENCHMARK(BM_EnsembleTables)->Arg(50)->Arg(200)->Unit(benchmark::kMillisecond);

void BM_Detect(benchmark::State& state) {
  const auto& sys = example1();
  const Step steps = 10000;
  TableOptions to;
  to.window = state.range(0);
  to.kappa = 2;
  const auto tables = build_analytic_tables(sys, steps, to);
  const Realization rz = run_realization(sys, std::nullopt, 3, steps);
  DetectorConfig cfg;
  cfg.window = to.window;
  cfg.kappa = 2;
  cfg.use_G = state.range(1) != 0;
  for (auto _ : state) benchmark::DoNotOptimize(detect(rz, sys, tables, cfg));
  state.SetItemsProcessed(state.iterations() * steps);
}
BENCHMARK(BM_Detect)->ArgsProduct({{20, 40}, {0, 1}})->Unit(benchmark::kMillisecond);

void BM_WindowStatistic(benchmark::State& state) {
  const Eigen::Index window = state.range(0);
  const Eigen::MatrixXd P = Eigen::MatrixXd::Random(3, window);
  Eigen::MatrixXd G = Eigen::MatrixXd::Identity(window, window);
  for (Eigen::Index a = 0; a < window; ++a) {
    for (Eigen::Index b = 0; b < window; ++b) {
      if (a != b) G(a, b) = std::pow(0.6, std::abs(a - b));
    }
  }
  const Eigen::MatrixXd L = G.llt().matrixL();
  for (auto _ : state) benchmark::DoNotOptimize(window_statistic_factored(P, L));
}
BENCHMARK(BM_WindowStatistic)->Arg(20)->Arg(60);

}  // namespace

BENCHMARK_MAIN();
