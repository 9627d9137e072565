// Serial reference driver against the OpenMP driver on scripted games.

#include <benchmark/benchmark.h>

#include "avalon/batch.hpp"

using namespace avalon;

namespace {

BatchSpec spec_for(int games) {
  BatchSpec spec;
  spec.n_games = games;
  spec.seed = 11;
  spec.make_agents = [](int, std::uint64_t s) { return scripted_agents(ScriptPolicy{}, s); };
  return spec;
}

void BM_BatchSerial(benchmark::State& state) {
  const auto spec = spec_for(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(play_batch_serial(spec));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_BatchParallel(benchmark::State& state) {
  const auto spec = spec_for(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(play_batch_parallel(spec));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

}  // namespace

BENCHMARK(BM_BatchSerial)->Arg(64)->Arg(256)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_BatchParallel)->Arg(64)->Arg(256)->Unit(benchmark::kMillisecond)->UseRealTime();

BENCHMARK_MAIN();
