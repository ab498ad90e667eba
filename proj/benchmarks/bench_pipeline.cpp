#include <benchmark/benchmark.h>

#include "jianpu/pipeline.hpp"
#include "jianpu/synth.hpp"

namespace {

using namespace jianpu;

const SynthPage& page() {
  static const SynthPage p = [] {
    AssetPaths paths;
    paths.root = JIANPU_BENCH_ASSET_DIR;
    return render_page(load_synth_assets(paths), SynthOptions{}, 17);
  }();
  return p;
}

PipelineConfig config() {
  PipelineConfig cfg;
  cfg.assets.root = JIANPU_BENCH_ASSET_DIR;
  return cfg;
}

void BM_DetectDigits(benchmark::State& state) {
  const auto templates = load_template_set(JIANPU_BENCH_ASSET_DIR, 1.2);
  for (auto _ : state) benchmark::DoNotOptimize(detect_digits(page().image, templates).size());
}
BENCHMARK(BM_DetectDigits)->Unit(benchmark::kMillisecond);

void BM_MelodyPage(benchmark::State& state) {
  const Pipeline pipeline(config(), false);
  for (auto _ : state) benchmark::DoNotOptimize(pipeline.process(page().image, "bench").musicxml.size());
}
BENCHMARK(BM_MelodyPage)->Unit(benchmark::kMillisecond);

void BM_RenderPage(benchmark::State& state) {
  AssetPaths paths;
  paths.root = JIANPU_BENCH_ASSET_DIR;
  const auto assets = load_synth_assets(paths);
  std::uint64_t seed = 0;
  for (auto _ : state) benchmark::DoNotOptimize(render_page(assets, SynthOptions{}, ++seed).truth.event_count());
}
BENCHMARK(BM_RenderPage)->Unit(benchmark::kMillisecond);

}  // namespace
