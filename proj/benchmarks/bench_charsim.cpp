#include <random>

#include <benchmark/benchmark.h>

#include "jianpu/charsim.hpp"
#include "jianpu/lyricocr.hpp"

namespace {

using namespace jianpu;

GrayImage glyph(const std::string& ch) {
  const auto img = atlas_glyph_source(std::filesystem::path(JIANPU_BENCH_ASSET_DIR) / "glyphs")(ch);
  if (!img) throw std::runtime_error("missing glyph " + ch);
  return normalize_patch(*img);
}

void BM_PhaseCorrelate(benchmark::State& state) {
  const GrayImage a = glyph("我"), b = glyph("找");
  for (auto _ : state) benchmark::DoNotOptimize(phase_correlate(a, b).peak);
}
BENCHMARK(BM_PhaseCorrelate)->Unit(benchmark::kMicrosecond);

void BM_AlignScale(benchmark::State& state) {
  const GrayImage a = glyph("我"), b = glyph("找");
  for (auto _ : state) benchmark::DoNotOptimize(align_scale(a, b).peak);
}
BENCHMARK(BM_AlignScale)->Unit(benchmark::kMicrosecond);

void BM_SkeletonSimilarity(benchmark::State& state) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 48.0);
  std::vector<PointF> a, b;
  for (int i = 0; i < state.range(0); ++i) {
    a.push_back({u(rng), u(rng)});
    b.push_back({u(rng), u(rng)});
  }
  for (auto _ : state) benchmark::DoNotOptimize(skeleton_similarity(a, b, 12.0));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_SkeletonSimilarity)->RangeMultiplier(2)->Range(16, 128)->Complexity(benchmark::oNCubed);

void BM_SkeletonMatchFull(benchmark::State& state) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.0, 48.0);
  std::vector<PointF> a, b;
  for (int i = 0; i < state.range(0); ++i) {
    a.push_back({u(rng), u(rng)});
    b.push_back({u(rng), u(rng)});
  }
  for (auto _ : state) benchmark::DoNotOptimize(skeleton_match(a, b, 12.0).s);
}
BENCHMARK(BM_SkeletonMatchFull)->Arg(32)->Arg(64);

void BM_ComparePatches(benchmark::State& state) {
  const GrayImage a = glyph("我"), b = glyph("找");
  const auto sa = skeleton_points(a), sb = skeleton_points(b);
  CompareOptions opts;
  opts.use_skeleton = state.range(0) != 0;
  for (auto _ : state) benchmark::DoNotOptimize(compare_patches(a, b, opts, &sa, &sb).fused);
}
BENCHMARK(BM_ComparePatches)->Arg(0)->Arg(1)->Unit(benchmark::kMicrosecond);

void BM_MatchCharacter(benchmark::State& state) {
  const auto dir = std::filesystem::path(JIANPU_BENCH_ASSET_DIR);
  const auto charset = load_charset(dir / "charset" / "freq3500.txt", static_cast<std::size_t>(state.range(0)));
  const auto table = build_template_table(charset, atlas_glyph_source(dir / "glyphs"));
  CharCandidate cand;
  cand.patch = resize_to(*atlas_glyph_source(dir / "glyphs")("和"), 27, 27);
  MatchOptions opts;
  for (auto _ : state) benchmark::DoNotOptimize(match_character(cand, table, opts).score);
}
BENCHMARK(BM_MatchCharacter)->Arg(1000)->Unit(benchmark::kMillisecond);

}  // namespace
