#include <numeric>
#include <vector>

#include <benchmark/benchmark.h>

#include "mlrel/estimators.hpp"
#include "mlrel/generator.hpp"
#include "mlrel/level_selection.hpp"
#include "mlrel/simulator.hpp"

using namespace mlrel;

namespace {

System make_system(int n, std::uint64_t seed, std::optional<double> repair = std::nullopt) {
  GrowthConfig cfg;
  cfg.target_components = n;
  cfg.seed = seed;
  cfg.shape = 0.5;
  cfg.repair_rate = repair;
  return grow(cfg);
}

std::vector<std::uint32_t> all_cuts(const System& sys) {
  std::vector<std::uint32_t> v(sys.cutsets.size());
  std::iota(v.begin(), v.end(), 0u);
  return v;
}

void BM_EnumerateLattice(benchmark::State& state) {
  const System sys = make_system(static_cast<int>(state.range(0)), 7);
  for (auto _ : state) {
    auto cuts = enumerate_min_cutsets(sys.network);
    benchmark::DoNotOptimize(cuts.data());
  }
  state.counters["cuts"] = static_cast<double>(sys.cutsets.size());
}
BENCHMARK(BM_EnumerateLattice)->Arg(20)->Arg(40)->Arg(70)->Unit(benchmark::kMillisecond);

void BM_EnumeratePaths(benchmark::State& state) {
  const System sys = make_system(static_cast<int>(state.range(0)), 7);
  for (auto _ : state) {
    auto cuts = enumerate_min_cutsets(sys.network, kDefaultCutsetCap,
                                      CutsetMethod::kPathDualization);
    benchmark::DoNotOptimize(cuts.data());
  }
}
BENCHMARK(BM_EnumeratePaths)->Arg(20)->Arg(30)->Unit(benchmark::kMillisecond);

void BM_OneShotLifetime(benchmark::State& state) {
  const System sys = make_system(static_cast<int>(state.range(0)), 7);
  const LifetimeSampler sampler(sys);
  const auto all = all_cuts(sys);
  std::vector<double> scratch(static_cast<std::size_t>(sys.component_count()));
  RngStream rng(1, make_stream_id(StreamPurpose::kTest, 0, 0));
  for (auto _ : state) benchmark::DoNotOptimize(sampler.sample(all, rng, scratch));
  state.counters["cuts"] = static_cast<double>(sys.cutsets.size());
}
BENCHMARK(BM_OneShotLifetime)->Arg(20)->Arg(40)->Arg(70);

void BM_CoupledLevel(benchmark::State& state) {
  const System sys = make_system(70, 7);
  RngStream pilot_rng(7, make_stream_id(StreamPurpose::kPilot, 0, 0));
  const auto part = build_partition(pilot_scores(sys, 100, pilot_rng, false));
  const auto sampler = make_level_sampler(sys, part, false);
  const int level = std::min(static_cast<int>(state.range(0)), part.top_level());
  std::uint64_t batch = 0;
  for (auto _ : state) {
    RngStream rng(1, make_stream_id(StreamPurpose::kLevel, static_cast<std::uint64_t>(level), batch++));
    BatchResult out;
    sampler->run_batch(level, 256, rng, out);
    benchmark::DoNotOptimize(out.y.mean);
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()) * 256);
}
BENCHMARK(BM_CoupledLevel)->DenseRange(0, 14, 2);

void BM_RepairTrajectory(benchmark::State& state) {
  const System sys = make_system(static_cast<int>(state.range(0)), 6, 0.05);
  const auto all = all_cuts(sys);
  const RepairEngine engine(sys, all, all);
  RepairEngine::Workspace ws;
  RngStream rng(1, make_stream_id(StreamPurpose::kTest, 0, 0));
  std::uint64_t events = 0;
  for (auto _ : state) events += engine.run(rng, ws).events;
  state.counters["events"] =
      benchmark::Counter(static_cast<double>(events), benchmark::Counter::kAvgIterations);
}
BENCHMARK(BM_RepairTrajectory)->Arg(20)->Arg(70);

void BM_PilotScores(benchmark::State& state) {
  const System sys = make_system(70, 7);
  for (auto _ : state) {
    RngStream rng(1, make_stream_id(StreamPurpose::kPilot, 0, 0));
    auto pilot = pilot_scores(sys, 100, rng, false);
    benchmark::DoNotOptimize(build_partition(pilot).levels.data());
  }
}
BENCHMARK(BM_PilotScores)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
