#include <random>

#include <gtest/gtest.h>

#include "jianpu/scorexport.hpp"
#include "midi_reader.hpp"
#include "musicxml_check.hpp"
#include "test_env.hpp"

using namespace jianpu;
using jianpu::testkit::read_midi;
using jianpu::testkit::read_musicxml;
using jianpu::testkit::validate_musicxml;

namespace {

const nlohmann::json& schema() {
  static const auto s = testkit::load_musicxml_schema(testkit::asset_dir() / "schema" / "musicxml-partwise-subset.json");
  return s;
}

NoteEvent note(int digit, Rational dur, int octave = 0) {
  NoteEvent e;
  e.digit = digit;
  e.octave_shift = octave;
  e.duration = dur;
  if (digit > 0) e.pitch = compute_pitch(e, 0, 4);
  return e;
}

ScoreGraph one_measure(std::vector<NoteEvent> events) {
  ScoreGraph s;
  Measure m;
  for (const auto& e : events) m.length += e.duration;
  m.events = std::move(events);
  s.systems.push_back({{m}});
  return s;
}

ScoreGraph random_score(unsigned seed) {
  std::mt19937 rng(seed);
  ScoreGraph s;
  s.title = "random & <score>";
  int group = 0;
  for (int sys = 0; sys < 3; ++sys) {
    System system;
    for (int mi = 0; mi < 4; ++mi) {
      Measure m;
      for (int k = 0; k < 5; ++k) {
        NoteEvent e;
        e.digit = static_cast<int>(rng() % 8);
        e.octave_shift = e.digit ? static_cast<int>(rng() % 3) - 1 : 0;
        e.underline_count = static_cast<int>(rng() % 3);
        e.augmentation_dots = rng() % 5 == 0 ? 1 : 0;
        e.dash_count = e.underline_count == 0 && rng() % 4 == 0 ? 1 : 0;
        e.duration = compute_duration(e);
        if (e.digit) e.pitch = compute_pitch(e, 0, 4);
        if (e.digit && rng() % 6 == 0) e.lyric = "\xe4\xb8\x80";
        if (rng() % 7 == 0) e.slur_group = group++;
        m.length += e.duration;
        m.events.push_back(e);
      }
      system.measures.push_back(m);
    }
    s.systems.push_back(system);
  }
  // Ties between equal neighbours.
  std::vector<NoteEvent*> flat;
  for (auto& sys : s.systems) {
    for (auto& m : sys.measures) {
      for (auto& e : m.events) flat.push_back(&e);
    }
  }
  for (std::size_t i = 0; i + 1 < flat.size(); ++i) {
    if (rng() % 4 == 0 && flat[i]->digit) {
      flat[i + 1]->digit = flat[i]->digit;
      flat[i + 1]->octave_shift = flat[i]->octave_shift;
      flat[i + 1]->pitch = flat[i]->pitch;
      flat[i]->tie_to_next = true;
    }
  }
  return s;
}

}  // namespace

TEST(MusicXml, SingleQuarterNote) {
  const std::string xml = to_musicxml(one_measure({note(1, 1)}));
  EXPECT_TRUE(validate_musicxml(xml, schema()).empty());
  const auto doc = read_musicxml(xml);
  ASSERT_EQ(doc.notes.size(), 1u);
  EXPECT_EQ(doc.notes[0].step, 'C');
  EXPECT_EQ(doc.notes[0].octave, 4);
  EXPECT_EQ(doc.notes[0].duration, 480);
  EXPECT_EQ(doc.divisions, 480);
}

TEST(MusicXml, TiedPairCarriesStartAndStop) {
  NoteEvent a = note(5, 1);
  a.tie_to_next = true;
  const std::string xml = to_musicxml(one_measure({a, note(5, 1)}));
  EXPECT_TRUE(validate_musicxml(xml, schema()).empty());
  const auto doc = read_musicxml(xml);
  ASSERT_EQ(doc.notes.size(), 2u);
  EXPECT_EQ(doc.notes[0].step, 'G');
  EXPECT_TRUE(doc.notes[0].tie_start);
  EXPECT_TRUE(doc.notes[1].tie_stop);
  EXPECT_FALSE(doc.notes[1].tie_start);
}

TEST(MusicXml, EmptyScoreIsValid) {
  const std::string xml = to_musicxml(ScoreGraph{});
  EXPECT_TRUE(validate_musicxml(xml, schema()).empty());
  EXPECT_EQ(read_musicxml(xml).measures, 0);
}

TEST(MusicXml, ValidatorCatchesStructuralErrors) {
  const std::string good = to_musicxml(one_measure({note(1, 1), note(0, 1)}));
  auto broken = [&](const std::string& from, const std::string& to) {
    std::string x = good;
    const auto pos = x.find(from);
    EXPECT_NE(pos, std::string::npos) << from;
    x.replace(pos, from.size(), to);
    return validate_musicxml(x, schema());
  };
  EXPECT_FALSE(broken("<duration>480</duration>", "").empty());
  EXPECT_FALSE(broken("<step>C</step>", "<step>H</step>").empty());
  EXPECT_FALSE(broken("<rest/>", "<rest>x</rest>").empty());
  EXPECT_FALSE(broken("<part id=\"P1\">", "<part id=\"P2\">").empty());
  EXPECT_FALSE(broken("number=\"1\"", "number=\"2\"").empty());
  EXPECT_FALSE(broken("</score-partwise>", "").empty());
  EXPECT_FALSE(broken("<duration>480</duration>", "<duration>480</duration><voice>1</voice>").empty());
}

TEST(MusicXml, ReaderReproducesEvents) {
  for (unsigned seed = 0; seed < 10; ++seed) {
    const ScoreGraph s = random_score(seed);
    const std::string xml = to_musicxml(s);
    const auto errors = validate_musicxml(xml, schema());
    EXPECT_TRUE(errors.empty()) << (errors.empty() ? "" : errors[0]);
    const auto doc = read_musicxml(xml);
    std::size_t i = 0;
    for (const auto& sys : s.systems) {
      for (const auto& m : sys.measures) {
        for (const auto& e : m.events) {
          ASSERT_LT(i, doc.notes.size());
          const auto& n = doc.notes[i++];
          EXPECT_EQ(n.rest, e.is_rest());
          if (!e.is_rest()) {
            EXPECT_EQ(n.midi_key(), *e.pitch);
          }
          EXPECT_EQ(n.duration, (e.duration * Rational(480)).num());
          EXPECT_EQ(n.lyric.has_value(), e.lyric.has_value() && !e.is_rest());
        }
      }
    }
    EXPECT_EQ(i, doc.notes.size());
  }
}

TEST(MusicXml, SlurGroupEndpoints) {
  NoteEvent a = note(1, 1), b = note(2, 1), c = note(3, 1);
  a.slur_group = b.slur_group = c.slur_group = 4;
  const auto doc = read_musicxml(to_musicxml(one_measure({a, b, c, note(4, 1)})));
  EXPECT_TRUE(doc.notes[0].slur_start);
  EXPECT_FALSE(doc.notes[1].slur_start || doc.notes[1].slur_stop);
  EXPECT_TRUE(doc.notes[2].slur_stop);
  EXPECT_FALSE(doc.notes[3].slur_start);
}

TEST(Export, UnresolvedEventsAreErrors) {
  NoteEvent bad = note(3, 1);
  bad.pitch.reset();
  EXPECT_THROW(to_musicxml(one_measure({bad})), ExportError);
  EXPECT_THROW(to_midi(one_measure({bad})), ExportError);
  NoteEvent zero = note(3, 1);
  zero.duration = Rational(0);
  EXPECT_THROW(to_musicxml(one_measure({zero})), ExportError);
  ExportOptions o;
  o.divisions = 0;
  EXPECT_THROW(to_musicxml(ScoreGraph{}, o), ExportError);
  o.divisions = 480;
  o.tempo_bpm = 0;
  EXPECT_THROW(to_midi(ScoreGraph{}, o), ExportError);
}

TEST(Midi, SingleBeatNote) {
  const auto midi = read_midi(to_midi(one_measure({note(1, 1)})));
  EXPECT_EQ(midi.format, 0);
  EXPECT_EQ(midi.division, 480);
  ASSERT_EQ(midi.notes.size(), 1u);
  EXPECT_EQ(midi.notes[0].key, 60);
  EXPECT_EQ(midi.notes[0].off_tick - midi.notes[0].on_tick, 480);
  ASSERT_EQ(midi.tempos.size(), 1u);
  EXPECT_EQ(midi.tempo_ticks[0], 0);
  EXPECT_EQ(midi.tempos[0], 600000u);
}

TEST(Midi, TieMergesIntoOneNote) {
  NoteEvent a = note(5, 1);
  a.tie_to_next = true;
  const auto midi = read_midi(to_midi(one_measure({a, note(5, 1)})));
  ASSERT_EQ(midi.notes.size(), 1u);
  EXPECT_EQ(midi.notes[0].off_tick - midi.notes[0].on_tick, 960);
}

TEST(Midi, RestsBecomeGaps) {
  const auto midi = read_midi(to_midi(one_measure({note(1, Rational(1, 2)), note(0, 1), note(2, 1), note(0, 2)})));
  ASSERT_EQ(midi.notes.size(), 2u);
  EXPECT_EQ(midi.notes[1].on_tick, 240 + 480);
  EXPECT_EQ(midi.end_tick, 240 + 480 + 480 + 960);
}

TEST(Midi, TotalTicksMatchTotalBeats) {
  for (unsigned seed = 0; seed < 20; ++seed) {
    const ScoreGraph s = random_score(seed + 50);
    const auto midi = read_midi(to_midi(s));
    EXPECT_EQ(Rational(midi.end_tick), s.total_beats() * Rational(480));
  }
}

TEST(Midi, OptionalLyricEvents) {
  NoteEvent a = note(1, 1);
  a.lyric = "la";
  ExportOptions o;
  EXPECT_TRUE(read_midi(to_midi(one_measure({a}), o)).lyrics.empty());
  o.midi_lyrics = true;
  const auto midi = read_midi(to_midi(one_measure({a}), o));
  ASSERT_EQ(midi.lyrics.size(), 1u);
  EXPECT_EQ(midi.lyrics[0].second, "la");
}

TEST(Midi, ReaderRejectsTruncatedFiles) {
  auto bytes = to_midi(one_measure({note(1, 1)}));
  bytes.pop_back();
  EXPECT_THROW(read_midi(bytes), std::runtime_error);
}
