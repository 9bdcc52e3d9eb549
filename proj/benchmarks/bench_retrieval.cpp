#include <benchmark/benchmark.h>

#include "bench_common.hpp"
#include "ragcap/embedding.hpp"
#include "ragcap/retrieval.hpp"

namespace {

using namespace ragcap;

void BM_TopK(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto dim = static_cast<std::size_t>(state.range(1));
  const auto threads = static_cast<unsigned>(state.range(2));
  const auto store = bench::make_store(n, dim);
  std::mt19937_64 rng(2);
  const auto q = normalize(bench::gaussian(rng, dim));
  for (auto _ : state) benchmark::DoNotOptimize(retrieve_topk(q, store, 3, threads));
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(n));
}
BENCHMARK(BM_TopK)
    ->ArgNames({"n", "dim", "threads"})
    ->Args({1000, 64, 1})
    ->Args({10000, 512, 1})
    ->Args({100000, 512, 1})
    ->Args({100000, 512, 4})
    ->UseRealTime()
    ->Unit(benchmark::kMicrosecond);

void BM_InRange(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const std::size_t dim = 8;
  const auto store = bench::make_store(n, dim);
  std::mt19937_64 rng(3);
  const auto q = normalize(bench::gaussian(rng, dim));
  RetrievalConfig cfg;
  cfg.mode = RetrievalMode::Training;
  std::uint64_t seed = 0;
  for (auto _ : state) {
    cfg.seed = seed++;
    benchmark::DoNotOptimize(retrieve_in_range(q, store, cfg, "q"));
  }
}
BENCHMARK(BM_InRange)->Arg(10000)->Arg(100000)->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
