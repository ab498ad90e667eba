#include <random>

#include <benchmark/benchmark.h>

#include "jianpu/anisoindex.hpp"
#include "jianpu/morphoskel.hpp"
#include "jianpu/preprocess.hpp"
#include "jianpu/synth.hpp"

namespace {

using namespace jianpu;

void BM_LogFilter(benchmark::State& state) {
  const GrayImage page = render_ruled_page(static_cast<int>(state.range(0)), static_cast<int>(state.range(0)), 0.0, 1);
  for (auto _ : state) benchmark::DoNotOptimize(log_filter(page, 1.2));
  state.SetComplexityN(state.range(0) * state.range(0));
}
BENCHMARK(BM_LogFilter)->Arg(256)->Arg(512)->Arg(1024)->Unit(benchmark::kMillisecond);

void BM_DualGamma(benchmark::State& state) {
  const GrayImage page = render_ruled_page(1000, 1400, 0.0, 2);
  for (auto _ : state) {
    const auto prof = estimate_lighting(page);
    benchmark::DoNotOptimize(dual_gamma(page, prof));
  }
}
BENCHMARK(BM_DualGamma)->Unit(benchmark::kMillisecond);

void BM_Deskew(benchmark::State& state) {
  const GrayImage page = render_ruled_page(800, 1000, 1.5, 3);
  for (auto _ : state) benchmark::DoNotOptimize(deskew(page).angle);
}
BENCHMARK(BM_Deskew)->Unit(benchmark::kMillisecond);

void BM_Thinning(benchmark::State& state) {
  const GrayImage page = render_ruled_page(400, 400, 0.0, 4);
  const BinaryImage bin = binarize(page, 0.5);
  for (auto _ : state) benchmark::DoNotOptimize(zhang_suen_thin(bin));
}
BENCHMARK(BM_Thinning)->Unit(benchmark::kMillisecond);

void BM_KdNearest(benchmark::State& state) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1000.0);
  std::vector<IndexedPoint> pts;
  for (int i = 0; i < state.range(0); ++i) pts.push_back({{u(rng), u(rng)}, i});
  const SpatialIndex index(pts);
  const EllipticalMetric metric(12.0, 36.0);
  for (auto _ : state) benchmark::DoNotOptimize(index.nearest({u(rng), u(rng)}, metric).payload);
}
BENCHMARK(BM_KdNearest)->Arg(1000)->Arg(100000);

}  // namespace
