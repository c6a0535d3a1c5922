#include <cstdint>
#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "loft/estimate_path.h"
#include "loft/traffic.h"
#include "loft/update_path.h"

namespace loft {
namespace {

// One estimate-path major cycle: Z arrays of width W filled by N flows.
struct MajorFixture {
  std::vector<CounterArray> arrays;
  std::vector<FlowId> active;

  MajorFixture(std::uint32_t width, std::uint32_t z, std::uint64_t flows) {
    std::mt19937_64 rng(5);
    for (FlowId f = 0; f < flows; ++f) active.push_back(f);
    for (std::uint32_t k = 0; k < z; ++k) {
      arrays.emplace_back(0, k, rng(), width);
      for (FlowId f = 0; f < flows; ++f) {
        arrays.back().Update({0, f, static_cast<std::uint32_t>(64 + rng() % 1437)});
      }
    }
  }
};

void BM_AccumulateMajorCycle(benchmark::State& state) {
  const MajorFixture fx(static_cast<std::uint32_t>(state.range(0)), 16,
                        static_cast<std::uint64_t>(state.range(1)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(AccumulateMajorCycle(fx.arrays, fx.active));
  }
  state.SetItemsProcessed(state.iterations() * state.range(1));
}
BENCHMARK(BM_AccumulateMajorCycle)
    ->Args({2048, 16384})
    ->Args({16384, 130000})
    ->Unit(benchmark::kMillisecond);

void BM_EstimateMajorCycle(benchmark::State& state) {
  const auto flows = static_cast<std::uint64_t>(state.range(1));
  const MajorFixture fx(static_cast<std::uint32_t>(state.range(0)), 16, flows);
  EstimatePath path(64, 16, EstimateMode::kCounting, 1 << 22);
  for (auto _ : state) {
    auto w = path.RunMajorCycle(fx.arrays, fx.active);
    benchmark::DoNotOptimize(w);
  }
  state.SetItemsProcessed(state.iterations() * flows);
}
BENCHMARK(BM_EstimateMajorCycle)
    ->Args({2048, 16384})
    ->Args({16384, 130000})
    ->Unit(benchmark::kMillisecond);

void BM_SelectWatchlist(benchmark::State& state) {
  const auto flows = static_cast<std::uint64_t>(state.range(0));
  FlowTable table(flows);
  std::mt19937_64 rng(9);
  std::vector<FlowId> ids;
  std::vector<MajorDelta> deltas;
  for (FlowId f = 0; f < flows; ++f) {
    ids.push_back(f);
    deltas.push_back({rng() % 1'000'000, 1 + rng() % 200});
  }
  if (!table.Update(ids, deltas).ok()) state.SkipWithError("table update failed");
  for (auto _ : state) benchmark::DoNotOptimize(SelectWatchlist(table, 1, 64));
  state.SetItemsProcessed(state.iterations() * flows);
}
BENCHMARK(BM_SelectWatchlist)->Arg(16384)->Arg(130000)->Unit(benchmark::kMillisecond);

}  // namespace
}  // namespace loft
