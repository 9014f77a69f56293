#include <benchmark/benchmark.h>

#include "energyecon/exchange.hpp"
#include "energyecon/scenario_io.hpp"
#include "energyecon/verify.hpp"

namespace {

using namespace energyecon;

const EconomyScenario& village() {
  static const EconomyScenario s = load_scenario(ENERGYECON_SCENARIO_DIR "/default.json");
  return s;
}

void BM_SolveAutarky(benchmark::State& state) {
  EconomyScenario s = village();
  s.horizon = static_cast<int>(state.range(0));
  for (auto& f : s.final_goods) f.weights.resize(static_cast<std::size_t>(s.horizon), f.weights.front());
  for (auto _ : state) benchmark::DoNotOptimize(solve_autarky(s).utility);
}
BENCHMARK(BM_SolveAutarky)->DenseRange(1, 5)->Unit(benchmark::kMillisecond);

void BM_TransferMin(benchmark::State& state) {
  const AutarkyEquilibrium eq = solve_autarky(village());
  for (auto _ : state) benchmark::DoNotOptimize(solve_transfer_min(eq.producer_problem).total_objective());
}
BENCHMARK(BM_TransferMin)->Unit(benchmark::kMicrosecond);

void BM_SampleMetc(benchmark::State& state) {
  const AutarkyEquilibrium eq = solve_autarky(village());
  MetcSampling grid;
  grid.points = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(sample_metc(eq, "bread", 0, grid)(1.0));
}
BENCHMARK(BM_SampleMetc)->Arg(8)->Arg(32)->Unit(benchmark::kMillisecond);

void BM_Tatonnement(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  std::vector<std::vector<MarketPosition>> agents(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (int g = 0; g < 4; ++g) {
      std::string id = "g" + std::to_string(g);
      agents[i].push_back({MetcCurve::linear(id, 1.0 + 0.3 * static_cast<double>(i), 0.5 + 0.1 * g), 2.0, 0.0});
    }
  }
  for (auto _ : state) benchmark::DoNotOptimize(multi_agent_tatonnement(agents).energy_released.front());
}
BENCHMARK(BM_Tatonnement)->RangeMultiplier(4)->Range(2, 32)->Unit(benchmark::kMicrosecond);

void BM_Verify(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(run_invariant_suite(village()).checks.size());
}
BENCHMARK(BM_Verify)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
