#include <random>

#include <gtest/gtest.h>

#include "jianpu/semantics.hpp"

using namespace jianpu;

namespace {

constexpr double kH = 30.0;

SymbolDetection at(SymbolKind kind, double cx, double cy, double w, double h, std::optional<int> value = {}) {
  SymbolDetection d;
  d.kind = kind;
  d.value = value;
  d.center = {cx, cy};
  d.box = {static_cast<int>(cx - w / 2), static_cast<int>(cy - h / 2), static_cast<int>(cx + w / 2),
           static_cast<int>(cy + h / 2)};
  d.score = 1.0;
  return d;
}

SymbolDetection digit(int v, double cx, double cy) {
  return at(v == 0 ? SymbolKind::rest : SymbolKind::digit, cx, cy, 18, kH, v);
}
SymbolDetection dot(double cx, double cy) { return at(SymbolKind::octave_dot, cx, cy, 5, 5); }
SymbolDetection underline(double cx, double cy) { return at(SymbolKind::underline, cx, cy, 26, 2); }
SymbolDetection dash(double cx, double cy) { return at(SymbolKind::dash, cx, cy, 16, 3); }
SymbolDetection barline(double cx, double cy) { return at(SymbolKind::barline, cx, cy, 2, 48); }

SystemDetections row(std::vector<SymbolDetection> dets) {
  auto rows = group_systems(dets);
  EXPECT_EQ(rows.size(), 1u);
  return rows.empty() ? SystemDetections{} : rows[0];
}

ScoreGraph sample_score() {
  ScoreGraph s;
  s.title = "sample \"quoted\" <title>";
  s.key_root = 2;
  s.base_octave = 3;
  s.beats_per_measure = Rational(3);
  Measure m;
  NoteEvent a;
  a.digit = 3;
  a.underline_count = 1;
  a.duration = Rational(1, 2);
  a.pitch = 54;
  a.slur_group = 0;
  a.lyric = "\xe6\x98\xa5";
  a.position = {10.25, 20.5};
  NoteEvent b = a;
  b.digit = 0;
  b.pitch.reset();
  b.slur_group.reset();
  b.lyric.reset();
  b.augmentation_dots = 1;
  b.underline_count = 0;
  b.duration = Rational(3, 2);
  NoteEvent c;
  c.digit = 5;
  c.dash_count = 1;
  c.tie_to_next = true;
  c.octave_shift = -1;
  c.duration = Rational(2);
  c.pitch = 45;
  m.events = {a, b, c};
  m.length = Rational(4);
  m.barline_x = 300.5;
  Measure open = m;
  open.barline_x.reset();
  s.systems.push_back({{m, open}});
  s.systems.push_back({});
  return s;
}

}  // namespace

TEST(RationalTest, ArithmeticIsExact) {
  EXPECT_EQ(Rational(1, 2) + Rational(1, 3), Rational(5, 6));
  EXPECT_EQ(Rational(6, -8), Rational(-3, 4));
  EXPECT_EQ(Rational(3, 2) * Rational(2, 3), Rational(1));
  EXPECT_EQ(Rational::parse("3/12"), Rational(1, 4));
  EXPECT_EQ(Rational(7, 4).str(), "7/4");
  EXPECT_THROW(Rational(1, 0), std::domain_error);
  EXPECT_THROW(Rational::parse("x/2"), std::invalid_argument);
  EXPECT_LT(Rational(1, 3), Rational(1, 2));
}

TEST(Duration, RuleTable) {
  NoteEvent e;
  EXPECT_EQ(compute_duration(e), Rational(1));
  e.underline_count = 1;
  EXPECT_EQ(compute_duration(e), Rational(1, 2));
  e.underline_count = 2;
  EXPECT_EQ(compute_duration(e), Rational(1, 4));
  e.underline_count = 0;
  e.dash_count = 1;
  EXPECT_EQ(compute_duration(e), Rational(2));
  e.dash_count = 0;
  e.augmentation_dots = 1;
  EXPECT_EQ(compute_duration(e), Rational(3, 2));
  e.underline_count = 1;
  EXPECT_EQ(compute_duration(e), Rational(3, 4));
}

TEST(Duration, DenominatorsArePowersOfTwo) {
  for (int u = 0; u <= 4; ++u) {
    for (int d = 0; d <= 3; ++d) {
      for (int a = 0; a <= 1; ++a) {
        NoteEvent e;
        e.underline_count = u;
        e.dash_count = d;
        e.augmentation_dots = a;
        const Rational r = compute_duration(e);
        EXPECT_EQ(r.den() & (r.den() - 1), 0) << r;
      }
    }
  }
}

TEST(Pitch, MovableDoTable) {
  NoteEvent e;
  e.digit = 1;
  EXPECT_EQ(compute_pitch(e, 0, 4), 60);
  e.digit = 5;
  e.octave_shift = 1;
  EXPECT_EQ(compute_pitch(e, 0, 4), 79);
  e.digit = 7;
  e.octave_shift = -1;
  EXPECT_EQ(compute_pitch(e, 2, 4), 59 + 2);
  e.digit = 0;
  EXPECT_THROW(compute_pitch(e, 0, 4), std::invalid_argument);
}

TEST(ScoreJson, RoundTripIsLossless) {
  const ScoreGraph s = sample_score();
  const auto doc = score_to_json(s);
  const ScoreGraph back = score_from_json(doc);
  EXPECT_EQ(back, s);
  EXPECT_EQ(score_to_json(back).dump(), doc.dump());
  EXPECT_EQ(s.event_count(), 6u);
  EXPECT_EQ(s.total_beats(), Rational(8));
}

TEST(ScoreJson, ErrorsNameTheField) {
  auto doc = score_to_json(sample_score());
  auto missing = doc;
  missing["systems"][0]["measures"][1]["events"][2].erase("digit");
  try {
    score_from_json(missing);
    FAIL();
  } catch (const ScoreFormatError& e) {
    EXPECT_NE(std::string(e.what()).find("$.systems[0].measures[1].events[2].digit"), std::string::npos) << e.what();
  }
  auto version = doc;
  version["version"] = 99;
  try {
    score_from_json(version);
    FAIL();
  } catch (const ScoreFormatError& e) {
    EXPECT_NE(std::string(e.what()).find("incompatible"), std::string::npos);
  }
  auto wrong = doc;
  wrong["key_root"] = "C";
  EXPECT_THROW(score_from_json(wrong), ScoreFormatError);
  auto bad_duration = doc;
  bad_duration["systems"][0]["measures"][0]["events"][0]["duration"] = "0";
  EXPECT_THROW(score_from_json(bad_duration), ScoreFormatError);
  EXPECT_THROW(score_from_json(nlohmann::json::array()), ScoreFormatError);
}

TEST(Rows, GroupsByVerticalGaps) {
  std::vector<SymbolDetection> dets;
  for (int i = 0; i < 5; ++i) dets.push_back(digit(1 + i, 100 + 40 * i, 100 + (i % 2)));
  for (int i = 0; i < 4; ++i) dets.push_back(digit(1 + i, 100 + 40 * i, 260));
  dets.push_back(underline(100, 120));
  dets.push_back(dot(140, 240));
  const auto rows = group_systems(dets);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0].notes.size(), 5u);
  EXPECT_EQ(rows[1].notes.size(), 4u);
  EXPECT_EQ(rows[0].others.size(), 1u);
  EXPECT_EQ(rows[1].others.size(), 1u);
  for (std::size_t i = 1; i < rows[0].notes.size(); ++i) {
    EXPECT_LT(rows[0].notes[i - 1].center.x, rows[0].notes[i].center.x);
  }
  EXPECT_TRUE(group_systems({}).empty());
}

TEST(Attributes, FigureSixLayoutAcrossRatios) {
  // A dot to the right of the first note and a dot under the second note,
  // placed where the under-dot is not far from the first note either.
  for (double ratio = 2.0; ratio <= 6.0 + 1e-9; ratio += 0.5) {
    SemanticsConfig cfg;
    cfg.octave = {1.2 / ratio, 1.2};
    cfg.augmentation = {1.2, 1.2 / ratio};
    const auto sys = row({digit(2, 0 + 100, 100), digit(3, 40 + 100, 100), dot(140, 121), dot(116, 100)});
    std::vector<std::string> warnings;
    const auto ev = resolve_note_attributes(sys, kH, cfg, &warnings);
    ASSERT_EQ(ev.size(), 2u);
    EXPECT_EQ(ev[0].augmentation_dots, 1) << ratio;
    EXPECT_EQ(ev[0].octave_shift, 0) << ratio;
    EXPECT_EQ(ev[1].octave_shift, -1) << ratio;
    EXPECT_EQ(ev[1].augmentation_dots, 0) << ratio;
    EXPECT_TRUE(warnings.empty());
  }
}

TEST(Attributes, UnderlinesDashesAndOctaves) {
  SemanticsConfig cfg;
  const auto sys = row({digit(1, 100, 100), digit(2, 150, 100), digit(5, 200, 100), digit(6, 300, 100),
                        underline(100, 120), underline(100, 125), underline(150, 120), dot(200, 76),
                        dot(200, 70), dash(240, 100), dash(270, 100)});
  const auto ev = resolve_note_attributes(sys, kH, cfg);
  ASSERT_EQ(ev.size(), 4u);
  EXPECT_EQ(ev[0].underline_count, 2);
  EXPECT_EQ(ev[0].duration, Rational(1, 4));
  EXPECT_EQ(ev[1].underline_count, 1);
  EXPECT_EQ(ev[2].octave_shift, 2);
  EXPECT_EQ(ev[2].dash_count, 2);
  EXPECT_EQ(ev[2].duration, Rational(3));
  EXPECT_EQ(ev[2].pitch, 67 + 24);
  EXPECT_EQ(ev[3].duration, Rational(1));
}

TEST(Attributes, NoMarksGiveDefaultsAndOrphansWarn) {
  SemanticsConfig cfg;
  std::vector<std::string> warnings;
  const auto ev = resolve_note_attributes(row({digit(4, 100, 100), dot(400, 100)}), kH, cfg, &warnings);
  ASSERT_EQ(ev.size(), 1u);
  EXPECT_EQ(ev[0].octave_shift, 0);
  EXPECT_EQ(ev[0].augmentation_dots, 0);
  EXPECT_EQ(ev[0].duration, Rational(1));
  EXPECT_EQ(warnings.size(), 1u);
}

TEST(Attributes, EachMarkBindsAtMostOnce) {
  std::mt19937 rng(2);
  std::uniform_real_distribution<double> jitter(-4, 4);
  SemanticsConfig cfg;
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<SymbolDetection> dets;
    int marks = 0;
    for (int i = 0; i < 6; ++i) {
      const double x = 100 + 48 * i;
      dets.push_back(digit(1 + i, x, 100));
      if (rng() % 2) {
        dets.push_back(dot(x + jitter(rng), 124 + jitter(rng) / 4));
        ++marks;
      }
      if (rng() % 2) {
        dets.push_back(underline(x + jitter(rng), 119));
        ++marks;
      }
    }
    const auto ev = resolve_note_attributes(row(dets), kH, cfg);
    int bound = 0;
    for (const auto& e : ev) bound += -e.octave_shift + e.underline_count + e.augmentation_dots;
    EXPECT_EQ(bound, marks);
  }
}

TEST(Attributes, TranslationInvariance) {
  SemanticsConfig cfg;
  std::vector<SymbolDetection> base = {digit(1, 100, 100), digit(3, 150, 100), underline(100, 120),
                                       dot(150, 76), dash(190, 100), dot(120, 100)};
  auto shifted = base;
  for (auto& d : shifted) {
    d.center.x += 333;
    d.center.y += 71;
    d.box = {d.box.x0 + 333, d.box.y0 + 71, d.box.x1 + 333, d.box.y1 + 71};
  }
  auto a = resolve_note_attributes(row(base), kH, cfg);
  auto b = resolve_note_attributes(row(shifted), kH, cfg);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    b[i].position = a[i].position;
    EXPECT_EQ(a[i], b[i]);
  }
}

TEST(Arcs, TieAndSlurBinding) {
  SemanticsConfig cfg;
  auto sys = row({digit(5, 100, 100), digit(5, 150, 100), digit(1, 200, 100), digit(3, 250, 100)});
  auto ev = resolve_note_attributes(sys, kH, cfg);
  int next = 0;
  std::vector<std::string> warnings;
  SymbolDetection tie = at(SymbolKind::tie_slur, 125, 78, 50, 10);
  tie.box = {100, 72, 151, 84};
  SymbolDetection slur = at(SymbolKind::tie_slur, 225, 78, 50, 10);
  slur.box = {200, 72, 251, 84};
  SymbolDetection stray = at(SymbolKind::tie_slur, 600, 78, 50, 10);
  bind_ties_slurs(ev, {tie, slur, stray}, kH, cfg, next, &warnings);
  EXPECT_TRUE(ev[0].tie_to_next);
  EXPECT_FALSE(ev[1].tie_to_next);
  EXPECT_FALSE(ev[0].slur_group);
  EXPECT_EQ(ev[2].slur_group, 0);
  EXPECT_EQ(ev[3].slur_group, 0);
  EXPECT_EQ(next, 1);
  EXPECT_EQ(warnings.size(), 1u);

  auto plain = resolve_note_attributes(sys, kH, cfg);
  bind_ties_slurs(plain, {}, kH, cfg, next);
  for (const auto& e : plain) {
    EXPECT_FALSE(e.tie_to_next);
    EXPECT_FALSE(e.slur_group);
  }
}

TEST(Lyrics, OneCharacterPerNote) {
  SemanticsConfig cfg;
  auto ev = resolve_note_attributes(
      row({digit(1, 100, 100), digit(2, 150, 100), digit(0, 200, 100), digit(3, 250, 100)}), kH, cfg);
  const std::vector<LyricChar> chars = {{"a", {101, 152}}, {"b", {149, 152}}, {"c", {252, 150}}, {"d", {500, 150}}};
  const auto left = align_lyrics(ev, chars, kH, cfg);
  EXPECT_EQ(ev[0].lyric, "a");
  EXPECT_EQ(ev[1].lyric, "b");
  EXPECT_FALSE(ev[2].lyric);
  EXPECT_EQ(ev[3].lyric, "c");
  ASSERT_EQ(left.size(), 1u);
  EXPECT_EQ(left[0].text, "d");
  EXPECT_TRUE(align_lyrics(ev, {}, kH, cfg).empty());
}

TEST(Lyrics, BetweenTwoNotesBindsToTheNearerInX) {
  SemanticsConfig cfg;
  auto ev = resolve_note_attributes(row({digit(1, 100, 100), digit(2, 124, 100)}), kH, cfg);
  align_lyrics(ev, {{"x", {110, 130}}}, kH, cfg);
  EXPECT_EQ(ev[0].lyric, "x");
  EXPECT_FALSE(ev[1].lyric);
}

TEST(Measures, SplitAtBarlines) {
  std::vector<NoteEvent> ev(4);
  for (int i = 0; i < 4; ++i) ev[i].position = {100.0 + 40 * i, 100};
  auto m = assemble_measures(ev, {170});
  ASSERT_EQ(m.size(), 2u);
  EXPECT_EQ(m[0].length, Rational(2));
  EXPECT_EQ(m[1].length, Rational(2));
  EXPECT_EQ(m[0].barline_x, 170.0);
  EXPECT_FALSE(m[1].barline_x);
  const auto single = assemble_measures(ev, {});
  ASSERT_EQ(single.size(), 1u);
  EXPECT_EQ(single[0].length, Rational(4));
}

TEST(Measures, LengthsConserveTotalDuration) {
  std::mt19937 rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<NoteEvent> ev(12);
    Rational total{0};
    for (int i = 0; i < 12; ++i) {
      ev[i].position = {50.0 * i, 0};
      ev[i].underline_count = static_cast<int>(rng() % 3);
      ev[i].duration = compute_duration(ev[i]);
      total += ev[i].duration;
    }
    std::vector<double> bars;
    for (int b = 0; b < 4; ++b) bars.push_back(static_cast<double>(rng() % 600));
    Rational sum{0};
    for (const auto& m : assemble_measures(ev, bars)) sum += m.length;
    EXPECT_EQ(sum, total);
  }
}

TEST(BuildScore, WholePageInterpretation) {
  SemanticsConfig cfg;
  std::vector<SymbolDetection> dets = {digit(1, 100, 100), digit(2, 150, 100), barline(175, 100),
                                       digit(3, 200, 100), dash(240, 100),      digit(1, 100, 250),
                                       digit(1, 150, 250)};
  SymbolDetection tie = at(SymbolKind::tie_slur, 125, 228, 50, 10);
  tie.box = {100, 222, 151, 234};
  dets.push_back(tie);
  const auto res = build_score(dets, FontMetrics{18, kH}, cfg, {{"x", {100, 300}}, {"y", {150, 150}}});
  ASSERT_EQ(res.score.systems.size(), 2u);
  ASSERT_EQ(res.score.systems[0].measures.size(), 2u);
  EXPECT_EQ(res.score.systems[0].measures[1].length, Rational(2));
  EXPECT_TRUE(res.score.systems[1].measures[0].events[0].tie_to_next);
  EXPECT_EQ(res.score.systems[1].measures[0].events[0].lyric, "x");
  EXPECT_EQ(res.score.systems[0].measures[0].events[1].lyric, "y");
  EXPECT_TRUE(res.unbound_lyrics.empty());
  EXPECT_TRUE(build_score({}, FontMetrics{}, cfg).score.systems.empty());
}
