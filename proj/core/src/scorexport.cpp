#include "jianpu/scorexport.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <optional>
#include <sstream>

#include <fmt/format.h>

namespace jianpu {

namespace {

std::string xml_escape(const std::string& s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&apos;"; break;
      default: out += c;
    }
  }
  return out;
}

std::int64_t to_ticks(const Rational& beats, int divisions, const NoteEvent& e) {
  const Rational t = beats * Rational(divisions);
  if (t.den() != 1) {
    throw ExportError(fmt::format("event at ({:.1f}, {:.1f}): duration {} is not a whole number of divisions",
                                  e.position.x, e.position.y, beats.str()));
  }
  return t.num();
}

void check_event(const NoteEvent& e) {
  if (e.duration <= Rational(0)) {
    throw ExportError(fmt::format("event at ({:.1f}, {:.1f}) has no duration", e.position.x, e.position.y));
  }
  if (!e.is_rest() && !e.pitch) {
    throw ExportError(fmt::format("event at ({:.1f}, {:.1f}) has no pitch", e.position.x, e.position.y));
  }
}

struct Spelling {
  char step;
  int alter;
  int octave;
};

Spelling spell(int midi) {
  static constexpr std::array<std::pair<char, int>, 12> kNames = {
      {{'C', 0}, {'C', 1}, {'D', 0}, {'D', 1}, {'E', 0}, {'F', 0},
       {'F', 1}, {'G', 0}, {'G', 1}, {'A', 0}, {'A', 1}, {'B', 0}}};
  const int pc = ((midi % 12) + 12) % 12;
  const int octave = (midi - pc) / 12 - 1;
  return {kNames[pc].first, kNames[pc].second, octave};
}

// Note type name plus dot flag when the duration has a simple notated form.
std::optional<std::pair<const char*, bool>> note_type(const Rational& beats) {
  static constexpr std::array<std::pair<const char*, std::int64_t>, 7> kTypes = {
      {{"whole", 64}, {"half", 32}, {"quarter", 16}, {"eighth", 8}, {"16th", 4}, {"32nd", 2}, {"64th", 1}}};
  for (const auto& [name, sixtyfourths] : kTypes) {
    const Rational base(sixtyfourths, 16);
    if (beats == base) return std::make_pair(name, false);
    if (beats == base * Rational(3, 2)) return std::make_pair(name, true);
  }
  return std::nullopt;
}

void put_u16(std::vector<std::uint8_t>& b, unsigned v) {
  b.push_back(static_cast<std::uint8_t>((v >> 8) & 0xff));
  b.push_back(static_cast<std::uint8_t>(v & 0xff));
}

void put_u32(std::vector<std::uint8_t>& b, std::uint32_t v) {
  for (int s = 24; s >= 0; s -= 8) b.push_back(static_cast<std::uint8_t>((v >> s) & 0xff));
}

void put_vlq(std::vector<std::uint8_t>& b, std::uint32_t v) {
  std::array<std::uint8_t, 5> tmp{};
  int n = 0;
  tmp[n++] = v & 0x7f;
  while (v >>= 7) tmp[n++] = static_cast<std::uint8_t>((v & 0x7f) | 0x80);
  while (n > 0) b.push_back(tmp[--n]);
}

}  // namespace

std::string to_musicxml(const ScoreGraph& score, const ExportOptions& opts) {
  if (opts.divisions < 1) throw ExportError("divisions must be >= 1");
  std::ostringstream x;
  x << R"(<?xml version="1.0" encoding="UTF-8" standalone="no"?>)" << '\n'
    << R"(<!DOCTYPE score-partwise PUBLIC "-//Recordare//DTD MusicXML 3.1 Partwise//EN" )"
    << R"("http://www.musicxml.org/dtds/partwise.dtd">)" << '\n'
    << R"(<score-partwise version="3.1">)" << '\n';
  if (!score.title.empty()) x << "  <work><work-title>" << xml_escape(score.title) << "</work-title></work>\n";
  x << "  <part-list>\n"
    << "    <score-part id=\"P1\"><part-name>" << xml_escape(opts.part_name) << "</part-name></score-part>\n"
    << "  </part-list>\n"
    << "  <part id=\"P1\">\n";

  // Flatten so ties can look at the next event across measure boundaries.
  std::vector<const NoteEvent*> flat;
  for (const auto& s : score.systems) {
    for (const auto& m : s.measures) {
      for (const auto& e : m.events) flat.push_back(&e);
    }
  }
  std::size_t idx = 0;
  int number = 0;
  bool prev_tied = false;
  std::optional<int> open_slur;
  for (const auto& s : score.systems) {
    for (const auto& m : s.measures) {
      x << "    <measure number=\"" << ++number << "\">\n";
      if (number == 1) {
        x << "      <attributes><divisions>" << opts.divisions << "</divisions></attributes>\n";
      }
      for (const auto& e : m.events) {
        check_event(e);
        const std::int64_t dur = to_ticks(e.duration, opts.divisions, e);
        const NoteEvent* next = idx + 1 < flat.size() ? flat[idx + 1] : nullptr;
        const bool tie_start = e.tie_to_next && !e.is_rest() && next && next->pitch == e.pitch;
        const bool tie_stop = prev_tied && !e.is_rest();
        const bool slur_start = e.slur_group && open_slur != e.slur_group;
        const bool slur_stop = e.slur_group && (!next || next->slur_group != e.slur_group);

        x << "      <note>\n";
        if (e.is_rest()) {
          x << "        <rest/>\n";
        } else {
          const Spelling sp = spell(*e.pitch);
          x << "        <pitch><step>" << sp.step << "</step>";
          if (sp.alter != 0) x << "<alter>" << sp.alter << "</alter>";
          x << "<octave>" << sp.octave << "</octave></pitch>\n";
        }
        x << "        <duration>" << dur << "</duration>\n";
        if (tie_stop) x << "        <tie type=\"stop\"/>\n";
        if (tie_start) x << "        <tie type=\"start\"/>\n";
        if (const auto t = note_type(e.duration)) {
          x << "        <type>" << t->first << "</type>\n";
          if (t->second) x << "        <dot/>\n";
        }
        if (tie_start || tie_stop || slur_start || slur_stop) {
          x << "        <notations>\n";
          if (tie_stop) x << "          <tied type=\"stop\"/>\n";
          if (tie_start) x << "          <tied type=\"start\"/>\n";
          if (slur_start) x << "          <slur type=\"start\" number=\"1\"/>\n";
          if (slur_stop) x << "          <slur type=\"stop\" number=\"1\"/>\n";
          x << "        </notations>\n";
        }
        if (e.lyric && !e.is_rest()) {
          x << "        <lyric number=\"1\"><syllabic>single</syllabic><text>" << xml_escape(*e.lyric)
            << "</text></lyric>\n";
        }
        x << "      </note>\n";
        prev_tied = tie_start;
        open_slur = slur_stop ? std::nullopt : e.slur_group;
        ++idx;
      }
      x << "    </measure>\n";
    }
  }
  x << "  </part>\n</score-partwise>\n";
  return x.str();
}

std::vector<std::uint8_t> to_midi(const ScoreGraph& score, const ExportOptions& opts) {
  if (opts.divisions < 1 || opts.divisions > 0x7fff) throw ExportError("divisions must be in [1, 32767]");
  if (!(opts.tempo_bpm > 0.0)) throw ExportError("tempo must be positive");

  std::vector<std::uint8_t> track;
  const auto usec = static_cast<std::uint32_t>(std::lround(60'000'000.0 / opts.tempo_bpm));
  put_vlq(track, 0);
  track.insert(track.end(), {0xff, 0x51, 0x03});
  track.push_back(static_cast<std::uint8_t>((usec >> 16) & 0xff));
  track.push_back(static_cast<std::uint8_t>((usec >> 8) & 0xff));
  track.push_back(static_cast<std::uint8_t>(usec & 0xff));

  std::vector<const NoteEvent*> flat;
  for (const auto& s : score.systems) {
    for (const auto& m : s.measures) {
      for (const auto& e : m.events) flat.push_back(&e);
    }
  }

  std::int64_t pending = 0;  // ticks since the last emitted event
  const auto vel = static_cast<std::uint8_t>(std::clamp(opts.velocity, 1, 127));
  for (std::size_t i = 0; i < flat.size();) {
    const NoteEvent& e = *flat[i];
    check_event(e);
    std::int64_t len = to_ticks(e.duration, opts.divisions, e);
    if (e.is_rest()) {
      pending += len;
      ++i;
      continue;
    }
    std::size_t j = i;
    while (flat[j]->tie_to_next && j + 1 < flat.size() && flat[j + 1]->pitch == e.pitch) {
      ++j;
      check_event(*flat[j]);
      len += to_ticks(flat[j]->duration, opts.divisions, *flat[j]);
    }
    const auto key = static_cast<std::uint8_t>(std::clamp(*e.pitch, 0, 127));
    if (opts.midi_lyrics && e.lyric) {
      put_vlq(track, static_cast<std::uint32_t>(pending));
      pending = 0;
      track.insert(track.end(), {0xff, 0x05});
      put_vlq(track, static_cast<std::uint32_t>(e.lyric->size()));
      track.insert(track.end(), e.lyric->begin(), e.lyric->end());
    }
    put_vlq(track, static_cast<std::uint32_t>(pending));
    track.insert(track.end(), {0x90, key, vel});
    put_vlq(track, static_cast<std::uint32_t>(len));
    track.insert(track.end(), {0x80, key, 0x40});
    pending = 0;
    i = j + 1;
  }
  put_vlq(track, static_cast<std::uint32_t>(pending));
  track.insert(track.end(), {0xff, 0x2f, 0x00});

  std::vector<std::uint8_t> out = {'M', 'T', 'h', 'd'};
  put_u32(out, 6);
  put_u16(out, 0);
  put_u16(out, 1);
  put_u16(out, static_cast<unsigned>(opts.divisions));
  out.insert(out.end(), {'M', 'T', 'r', 'k'});
  put_u32(out, static_cast<std::uint32_t>(track.size()));
  out.insert(out.end(), track.begin(), track.end());
  return out;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ExportError("cannot open " + path.string());
  f << text;
  if (!f) throw ExportError("write failed: " + path.string());
}

void write_bytes(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ExportError("cannot open " + path.string());
  f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw ExportError("write failed: " + path.string());
}

}  // namespace jianpu
