#include <benchmark/benchmark.h>

#include "difflab/diffusion.hpp"

using namespace difflab;

namespace {

ManifoldModel model_of(int64_t which) {
  switch (which) {
    case 0: return ManifoldModel::euclidean(1, Potential::quadratic(1.0));
    case 1: return ManifoldModel::sphere(2);
    default: return ManifoldModel::hyperbolic(2);
  }
}

void run(benchmark::State& state, Execution exec) {
  const auto m = model_of(state.range(0));
  const Point x0 = m.kind == ModelKind::Sphere       ? sphere_point(m, 0.0)
                   : m.kind == ModelKind::Hyperbolic ? hyperbolic_point(m, 0.0)
                                                     : Point{0.0};
  SimConfig cfg;
  cfg.dt = 1e-2;
  cfg.t_end = 1.0;
  cfg.n_paths = static_cast<std::size_t>(state.range(1));
  cfg.seed = 1;
  for (auto _ : state) {
    auto ens = sample_paths(m, x0, cfg, std::nullopt, exec);
    benchmark::DoNotOptimize(ens.terminal_points.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(1) * 100);
}

void BM_SamplePathsSerial(benchmark::State& s) { run(s, Execution::Serial); }
void BM_SamplePathsParallel(benchmark::State& s) { run(s, Execution::Parallel); }

}  // namespace

// Args: model (0 OU line, 1 sphere S^2, 2 hyperbolic H^2), paths.
BENCHMARK(BM_SamplePathsSerial)->ArgsProduct({{0, 1, 2}, {10000}})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SamplePathsParallel)->ArgsProduct({{0, 1, 2}, {10000}})->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
