#include <algorithm>
#include <fstream>

#include <gtest/gtest.h>

#include "jianpu/lyricocr.hpp"
#include "test_env.hpp"

using namespace jianpu;

namespace {

const GlyphSource& glyphs() {
  static const GlyphSource src = atlas_glyph_source(testkit::asset_dir() / "glyphs");
  return src;
}

const HanziTemplateTable& table200() {
  static const HanziTemplateTable t =
      build_template_table(load_charset(testkit::asset_dir() / "charset" / "freq3500.txt", 200), glyphs());
  return t;
}

/// Characters laid out left to right at `em` px, ink-bright.
GrayImage line_of(const std::vector<std::string>& chars, int em, std::vector<BoundingBox>* boxes = nullptr) {
  const int pitch = em + em / 2;
  FloatRaster r(em * 3, pitch * static_cast<int>(chars.size()) + em, 0.0f);
  int x0 = em / 2;
  for (const auto& ch : chars) {
    const GrayImage g = resize_to(*glyphs()(ch), em, em);
    for (int y = 0; y < em; ++y) {
      for (int x = 0; x < em; ++x) r(em + y, x0 + x) = std::max(r(em + y, x0 + x), g.at(y, x));
    }
    if (boxes) boxes->push_back({x0, em, x0 + em, 2 * em});
    x0 += pitch;
  }
  return GrayImage(std::move(r));
}

}  // namespace

TEST(Codepoints, HexRoundTrip) {
  EXPECT_EQ(codepoint_hex("\xe6\x88\x91"), "6211");
  EXPECT_EQ(codepoint_hex("A"), "0041");
  EXPECT_EQ(codepoint_hex("\xf0\xa0\x80\x80"), "20000");
  EXPECT_FALSE(codepoint_hex("ab").has_value());
  EXPECT_FALSE(codepoint_hex("").has_value());
  EXPECT_FALSE(codepoint_hex("\xe6\x88").has_value());
  for (const char* ch : {"\xe6\x88\x91", "A", "\xf0\xa0\x80\x80", "\xc3\xa9"}) {
    EXPECT_EQ(utf8_from_hex(*codepoint_hex(ch)), ch);
  }
  EXPECT_FALSE(utf8_from_hex("zz").has_value());
  EXPECT_FALSE(utf8_from_hex("d800").has_value());
}

TEST(Charset, LoadsWithLimit) {
  const auto all = load_charset(testkit::asset_dir() / "charset" / "freq3500.txt");
  EXPECT_EQ(all.size(), 3500u);
  EXPECT_EQ(all.front(), "\xe4\xb8\x80");
  const auto some = load_charset(testkit::asset_dir() / "charset" / "freq3500.txt", 10);
  ASSERT_EQ(some.size(), 10u);
  EXPECT_TRUE(std::equal(some.begin(), some.end(), all.begin()));
  EXPECT_ANY_THROW(load_charset("/nonexistent/charset.txt"));
}

TEST(TemplateTable, BuildsAndRejectsDuplicates) {
  const auto& t = table200();
  EXPECT_EQ(t.entries.size(), 200u);
  for (std::size_t i = 0; i < t.entries.size(); ++i) {
    EXPECT_EQ(t.entries[i].rank, static_cast<int>(i));
    EXPECT_EQ(t.entries[i].patch.height(), 48);
    EXPECT_FALSE(t.entries[i].skeleton.empty());
  }
  EXPECT_THROW(build_template_table({"\xe6\x88\x91", "\xe6\x88\x91"}, glyphs()), std::invalid_argument);
  const auto partial = build_template_table({"\xe6\x88\x91", "A"}, glyphs());
  EXPECT_EQ(partial.entries.size(), 1u);
}

TEST(NormalizePatch, FitsAndCentres) {
  FloatRaster r(30, 60, 0.0f);
  for (int y = 5; y < 15; ++y) {
    for (int x = 10; x < 50; ++x) r(y, x) = 1.0f;
  }
  const GrayImage n = normalize_patch(GrayImage(r));
  EXPECT_EQ(n.height(), 48);
  EXPECT_EQ(n.width(), 48);
  const BoundingBox b = ink_bounds(n, 0.3f);
  EXPECT_NEAR(b.width(), 40, 1);
  EXPECT_NEAR(b.center_x(), 24, 1);
  EXPECT_NEAR(b.center_y(), 24, 1);
}

TEST(Candidates, OnePerCharacter) {
  const std::vector<std::string> chars{"\xe6\x88\x91", "\xe4\xbb\xac", "\xe7\x9a\x84", "\xe5\xa4\xa9",
                                       "\xe4\xb8\x8a"};
  std::vector<BoundingBox> boxes;
  const GrayImage line = line_of(chars, 27, &boxes);
  CandidateOptions opts;
  opts.em_px = 27;
  auto cands = extract_candidates(line, opts);
  std::sort(cands.begin(), cands.end(), [](const CharCandidate& a, const CharCandidate& b) { return a.box.x0 < b.box.x0; });
  ASSERT_EQ(cands.size(), chars.size());
  for (std::size_t i = 0; i < cands.size(); ++i) {
    EXPECT_GT(box_iou(cands[i].box, boxes[i]), 0.5) << i;
    EXPECT_EQ(cands[i].patch.height(), cands[i].cell.height());
  }
  EXPECT_TRUE(extract_candidates(GrayImage::filled(60, 200, 0.0f), opts).empty());
}

TEST(Candidates, RejectsNonHanziShapes) {
  FloatRaster r(80, 200, 0.0f);
  for (int x = 10; x < 190; ++x) r(40, x) = r(41, x) = 1.0f;  // long rule
  for (int y = 30; y < 33; ++y) {
    for (int x = 100; x < 103; ++x) r(y, x) = 1.0f;  // speck
  }
  CandidateOptions opts;
  opts.em_px = 27;
  EXPECT_TRUE(extract_candidates(GrayImage(r), opts).empty());
}

TEST(Matching, CleanGlyphsRecognised) {
  const auto& t = table200();
  MatchOptions opts;
  for (int i : {0, 7, 42, 150, 199}) {
    const std::string& ch = t.entries[i].character;
    CharCandidate c;
    c.patch = resize_to(*glyphs()(ch), 30, 30);
    c.box = c.cell = {0, 0, 30, 30};
    const Recognition r = match_character(c, t, opts);
    EXPECT_EQ(r.character, ch) << i;
    EXPECT_GE(r.score, r.runner_up_score);
  }
}

TEST(Matching, PruningKeepsFullScanWinner) {
  const auto& t = table200();
  MatchOptions opts;
  opts.k1 = 16;
  for (int i : {3, 60, 120}) {
    const PreparedCandidate pc = prepare_candidate(resize_to(*glyphs()(t.entries[i].character), 28, 28));
    const auto full = full_scan_scores(pc, t, opts.compare);
    const int best = static_cast<int>(std::max_element(full.begin(), full.end()) - full.begin());
    const auto kept = prune_templates(pc, t, opts);
    EXPECT_LE(kept.size(), 16u);
    EXPECT_NE(std::find(kept.begin(), kept.end(), best), kept.end());
  }
}

TEST(Recognize, PageLine) {
  const std::vector<std::string> chars{"\xe6\x88\x91", "\xe4\xbb\xac", "\xe7\x9a\x84", "\xe5\xa4\xa9"};
  const GrayImage line = line_of(chars, 27);
  LyricOptions opts;
  opts.candidates.em_px = 27;
  auto recs = recognize_page(line, table200(), opts);
  std::sort(recs.begin(), recs.end(), [](const Recognition& a, const Recognition& b) { return a.box.x0 < b.box.x0; });
  ASSERT_EQ(recs.size(), chars.size());
  for (std::size_t i = 0; i < recs.size(); ++i) EXPECT_EQ(recs[i].character, chars[i]);

  const auto back = recognitions_from_json(recognitions_to_json("p", recs));
  ASSERT_EQ(back.size(), recs.size());
  for (std::size_t i = 0; i < recs.size(); ++i) {
    EXPECT_EQ(back[i].character, recs[i].character);
    EXPECT_EQ(back[i].box, recs[i].box);
    EXPECT_DOUBLE_EQ(back[i].score, recs[i].score);
    EXPECT_EQ(back[i].runner_up, recs[i].runner_up);
  }
}
