#include <benchmark/benchmark.h>

#include <cmath>
#include <random>

#include "otflow/otflow.hpp"

using namespace otflow;

namespace {

FeatureMap random_features(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> d;
  const int dim = 16;
  std::vector<double> v(static_cast<std::size_t>(n * n * dim));
  for (std::size_t i = 0; i < v.size(); i += dim) {
    double sq = 0.0;
    for (int c = 0; c < dim; ++c) sq += (v[i + c] = d(rng)) * v[i + c];
    for (int c = 0; c < dim; ++c) v[i + c] /= std::sqrt(sq);
  }
  return FeatureMap(n, n, dim, std::move(v));
}

void BM_Correlation(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const FeatureMap a = random_features(n, 1), b = random_features(n, 2);
  for (auto _ : state) benchmark::DoNotOptimize(build_correlation(a, b));
  state.SetComplexityN(static_cast<std::int64_t>(n) * n);
}
BENCHMARK(BM_Correlation)->Arg(8)->Arg(16)->Arg(24)->Complexity();

void BM_Sinkhorn(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const CostVolume c = build_correlation(random_features(n, 3), random_features(n, 4));
  SinkhornConfig cfg;
  cfg.max_iters = static_cast<int>(state.range(1));
  cfg.tol = 1e-300;
  for (auto _ : state) benchmark::DoNotOptimize(sinkhorn_dustbin(c, cfg));
}
BENCHMARK(BM_Sinkhorn)->Args({8, 50})->Args({16, 50})->Args({16, 200})->Unit(benchmark::kMillisecond);

void BM_Pipeline(benchmark::State& state) {
  SceneSpec s;
  s.motion = Translation{8.0, 4.0};
  s.texture_seed = 1;
  const Scene sc = synth_scene(s);
  PipelineConfig cfg;
  cfg.coupled_refinement = state.range(0) != 0;
  for (auto _ : state) benchmark::DoNotOptimize(estimate_flow(sc.images, cfg));
}
BENCHMARK(BM_Pipeline)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
