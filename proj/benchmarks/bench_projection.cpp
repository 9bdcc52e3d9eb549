#include <benchmark/benchmark.h>

#include "bench_common.hpp"
#include "ragcap/embedding.hpp"
#include "ragcap/projection.hpp"

namespace {

using namespace ragcap;

void BM_Project(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto dim = static_cast<std::size_t>(state.range(1));
  const auto support = bench::make_store(n, dim);
  std::mt19937_64 rng(4);
  const auto q = normalize(bench::gaussian(rng, dim));
  const ProjectionConfig cfg;
  for (auto _ : state) benchmark::DoNotOptimize(project(q, support, cfg));
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(n));
}
BENCHMARK(BM_Project)
    ->ArgNames({"n", "dim"})
    ->Args({1000, 64})
    ->Args({10000, 512})
    ->Args({50000, 512})
    ->Unit(benchmark::kMicrosecond);

void BM_Cosine(benchmark::State& state) {
  const auto dim = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(5);
  const auto a = bench::gaussian(rng, dim);
  const auto b = bench::gaussian(rng, dim);
  for (auto _ : state) benchmark::DoNotOptimize(cosine_similarity(a, b));
}
BENCHMARK(BM_Cosine)->Arg(64)->Arg(512)->Arg(1024);

}  // namespace

BENCHMARK_MAIN();
