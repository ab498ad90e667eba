#include <fstream>
#include <iterator>

#include <gtest/gtest.h>

#include "jianpu/evalkit.hpp"
#include "jianpu/pipeline.hpp"
#include "jianpu/scorexport.hpp"
#include "jianpu/synth.hpp"
#include "test_env.hpp"

using namespace jianpu;
namespace fs = std::filesystem;

namespace {

const Pipeline& melody_pipeline() {
  static const Pipeline p(testkit::test_config(), false);
  return p;
}

const SynthPage& sample_page() {
  static const SynthPage page = [] {
    const auto assets = load_synth_assets(testkit::test_assets(), 50);
    SynthOptions opts;
    opts.systems = 3;
    opts.max_skew_degrees = 1.0;
    return render_page(assets, opts, 77, "sample");
  }();
  return page;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(f), {}};
}

}  // namespace

TEST(Pipeline, RecoversSyntheticPage) {
  const auto& page = sample_page();
  const PageResult r = melody_pipeline().process(page.image, page.id);
  const EvalReport rep = evaluate_score(r.semantics.score, page.truth, page.digit_height);
  EXPECT_DOUBLE_EQ(rep.digit_joint.f1(), 1.0);
  EXPECT_GE(rep.note_joint.f1(), 0.95);
  EXPECT_NEAR(r.pre.angle, -page.skew_degrees, 0.1);
  EXPECT_FALSE(r.musicxml.empty());
  EXPECT_FALSE(r.midi.empty());
  EXPECT_EQ(r.timings_ms.front().first, "preprocess");
}

TEST(Pipeline, BlankPageWarns) {
  const PageResult r = melody_pipeline().process(render_ruled_page(300, 400, 0.0, 1), "ruled");
  EXPECT_EQ(r.semantics.score.event_count(), 0u);
  ASSERT_FALSE(r.warnings.empty());
  EXPECT_NE(r.warnings.front().find("no digits"), std::string::npos);
}

TEST(Pipeline, StagedThroughFilesMatchesInMemory) {
  const auto& page = sample_page();
  const auto& pipe = melody_pipeline();
  const PageResult direct = pipe.process(page.image, page.id);

  const auto dir = testkit::scratch_dir("staged");
  const auto pre = preprocess_page(page.image, pipe.config());
  save_png(pre.image, dir / "sample.png");
  PreprocessOutcome reloaded;
  reloaded.image = load_image(dir / "sample.png");
  reloaded.angle = pre.angle;
  EXPECT_EQ(reloaded.image, pre.image);
  const PageResult staged = pipe.process_preprocessed(reloaded, page.id);
  EXPECT_EQ(detections_to_json(staged), detections_to_json(direct));
  EXPECT_EQ(staged.musicxml, direct.musicxml);

  // Detections JSON alone rebuilds the same score.
  const auto rebuilt = score_from_detections(detections_to_json(direct), pipe.config().semantics);
  EXPECT_EQ(score_to_json(rebuilt.score), score_to_json(direct.semantics.score));
  EXPECT_EQ(to_midi(rebuilt.score, pipe.config().export_opts), direct.midi);
}

TEST(Pipeline, RunIsolatesBadPagesAndIsDeterministic) {
  const auto& page = sample_page();
  const auto in = testkit::scratch_dir("run_in");
  save_png(page.image, in / "a.png");
  { std::ofstream(in / "b.png") << "not a png"; }
  const std::vector<fs::path> pages{in / "a.png", in / "b.png"};

  RunOptions o1;
  o1.out_dir = testkit::scratch_dir("run_out1");
  const RunManifest m1 = run(melody_pipeline(), pages, o1);
  ASSERT_EQ(m1.pages.size(), 2u);
  EXPECT_TRUE(m1.pages[0].ok);
  EXPECT_FALSE(m1.pages[1].ok);
  EXPECT_FALSE(m1.pages[1].error.empty());
  EXPECT_EQ(m1.failures(), 1);
  EXPECT_TRUE(fs::exists(o1.out_dir / "manifest.json"));

  auto cfg = testkit::test_config();
  cfg.jobs = 2;
  RunOptions o2;
  o2.out_dir = testkit::scratch_dir("run_out2");
  const RunManifest m2 = run(cfg, pages, o2);
  EXPECT_EQ(m1.to_json(false), m2.to_json(false));
  for (const auto& f : m1.pages[0].outputs) EXPECT_EQ(slurp(o1.out_dir / f), slurp(o2.out_dir / f)) << f;
  EXPECT_THROW(run(melody_pipeline(), {}, o1), std::invalid_argument);
}

TEST(Pipeline, PageIdIsStem) { EXPECT_EQ(page_id("/a/b/page_03.png"), "page_03"); }

TEST(Pipeline, LyricStageRequiresTable) {
  EXPECT_THROW(melody_pipeline().recognize_lyrics(sample_page().image, {}, FontMetrics{}, "x"), std::logic_error);
}
