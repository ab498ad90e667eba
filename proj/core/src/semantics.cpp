#include "jianpu/semantics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <tuple>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

namespace jianpu {

namespace {

void warn(std::vector<std::string>* sink, std::string msg) {
  spdlog::debug("semantics: {}", msg);
  if (sink) sink->push_back(std::move(msg));
}

Point2 to_point(const PointF& p) { return {p.x, p.y}; }

double median_note_height(const std::vector<SymbolDetection>& notes) {
  std::vector<double> hs;
  for (const auto& n : notes) hs.push_back(n.box.height());
  if (hs.empty()) return 0.0;
  std::nth_element(hs.begin(), hs.begin() + hs.size() / 2, hs.end());
  return hs[hs.size() / 2];
}

// ---- JSON helpers ------------------------------------------------------

struct JsonPath {
  std::string path;
  JsonPath operator/(const std::string& key) const { return {path + "." + key}; }
  JsonPath operator[](std::size_t i) const { return {path + "[" + std::to_string(i) + "]"}; }
};

const nlohmann::json& field(const nlohmann::json& obj, const char* key, const JsonPath& at) {
  if (!obj.is_object()) throw ScoreFormatError(at.path + ": expected object");
  const auto it = obj.find(key);
  if (it == obj.end()) throw ScoreFormatError((at / key).path + ": missing required field");
  return *it;
}

template <typename T>
T typed(const nlohmann::json& v, const JsonPath& at) {
  try {
    return v.get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ScoreFormatError(at.path + ": wrong type");
  }
}

Rational rational_field(const nlohmann::json& v, const JsonPath& at) {
  try {
    if (v.is_number_integer()) return {v.get<std::int64_t>()};
    return Rational::parse(v.get<std::string>());
  } catch (const std::exception&) {
    throw ScoreFormatError(at.path + ": expected rational");
  }
}

nlohmann::json event_to_json(const NoteEvent& e) {
  nlohmann::json j = {{"digit", e.digit},
                      {"octave_shift", e.octave_shift},
                      {"underline_count", e.underline_count},
                      {"dash_count", e.dash_count},
                      {"augmentation_dots", e.augmentation_dots},
                      {"tie_to_next", e.tie_to_next},
                      {"position", {e.position.x, e.position.y}},
                      {"duration", e.duration.str()}};
  if (e.slur_group) j["slur_group"] = *e.slur_group;
  if (e.lyric) j["lyric"] = *e.lyric;
  if (e.pitch) j["pitch"] = *e.pitch;
  return j;
}

NoteEvent event_from_json(const nlohmann::json& j, const JsonPath& at) {
  NoteEvent e;
  e.digit = typed<int>(field(j, "digit", at), at / "digit");
  if (e.digit < 0 || e.digit > 7) throw ScoreFormatError((at / "digit").path + ": out of range");
  e.octave_shift = typed<int>(field(j, "octave_shift", at), at / "octave_shift");
  e.underline_count = typed<int>(field(j, "underline_count", at), at / "underline_count");
  e.dash_count = typed<int>(field(j, "dash_count", at), at / "dash_count");
  e.augmentation_dots = typed<int>(field(j, "augmentation_dots", at), at / "augmentation_dots");
  e.tie_to_next = typed<bool>(field(j, "tie_to_next", at), at / "tie_to_next");
  const auto& pos = field(j, "position", at);
  if (!pos.is_array() || pos.size() != 2) throw ScoreFormatError((at / "position").path + ": expected [x, y]");
  e.position = {typed<double>(pos[0], at / "position"), typed<double>(pos[1], at / "position")};
  e.duration = rational_field(field(j, "duration", at), at / "duration");
  if (e.duration <= Rational(0)) throw ScoreFormatError((at / "duration").path + ": must be positive");
  if (j.contains("slur_group")) e.slur_group = typed<int>(j["slur_group"], at / "slur_group");
  if (j.contains("lyric")) e.lyric = typed<std::string>(j["lyric"], at / "lyric");
  if (j.contains("pitch")) e.pitch = typed<int>(j["pitch"], at / "pitch");
  return e;
}

}  // namespace

// ---- ScoreGraph --------------------------------------------------------

std::size_t ScoreGraph::event_count() const {
  std::size_t n = 0;
  for (const auto& s : systems) {
    for (const auto& m : s.measures) n += m.events.size();
  }
  return n;
}

Rational ScoreGraph::total_beats() const {
  Rational t{0};
  for (const auto& s : systems) {
    for (const auto& m : s.measures) t += m.length;
  }
  return t;
}

nlohmann::json score_to_json(const ScoreGraph& score) {
  nlohmann::json systems = nlohmann::json::array();
  for (const auto& s : score.systems) {
    nlohmann::json measures = nlohmann::json::array();
    for (const auto& m : s.measures) {
      nlohmann::json events = nlohmann::json::array();
      for (const auto& e : m.events) events.push_back(event_to_json(e));
      nlohmann::json jm = {{"events", std::move(events)}, {"length", m.length.str()}};
      jm["barline_x"] = m.barline_x ? nlohmann::json(*m.barline_x) : nlohmann::json(nullptr);
      measures.push_back(std::move(jm));
    }
    systems.push_back({{"measures", std::move(measures)}});
  }
  return {{"version", ScoreGraph::kFormatVersion},
          {"title", score.title},
          {"key_root", score.key_root},
          {"base_octave", score.base_octave},
          {"beats_per_measure", score.beats_per_measure.str()},
          {"systems", std::move(systems)}};
}

ScoreGraph score_from_json(const nlohmann::json& doc) {
  const JsonPath root{"$"};
  const int version = typed<int>(field(doc, "version", root), root / "version");
  if (version != ScoreGraph::kFormatVersion) {
    throw ScoreFormatError(fmt::format("$.version: incompatible score format version {} (expected {})", version,
                                       ScoreGraph::kFormatVersion));
  }
  ScoreGraph score;
  score.title = doc.contains("title") ? typed<std::string>(doc["title"], root / "title") : std::string{};
  score.key_root = typed<int>(field(doc, "key_root", root), root / "key_root");
  score.base_octave = typed<int>(field(doc, "base_octave", root), root / "base_octave");
  score.beats_per_measure = rational_field(field(doc, "beats_per_measure", root), root / "beats_per_measure");
  const auto& systems = field(doc, "systems", root);
  if (!systems.is_array()) throw ScoreFormatError("$.systems: expected array");
  for (std::size_t si = 0; si < systems.size(); ++si) {
    const JsonPath sp = (root / "systems")[si];
    System sys;
    const auto& measures = field(systems[si], "measures", sp);
    if (!measures.is_array()) throw ScoreFormatError((sp / "measures").path + ": expected array");
    for (std::size_t mi = 0; mi < measures.size(); ++mi) {
      const JsonPath mp = (sp / "measures")[mi];
      Measure m;
      m.length = rational_field(field(measures[mi], "length", mp), mp / "length");
      const auto& bx = field(measures[mi], "barline_x", mp);
      if (!bx.is_null()) m.barline_x = typed<double>(bx, mp / "barline_x");
      const auto& events = field(measures[mi], "events", mp);
      if (!events.is_array()) throw ScoreFormatError((mp / "events").path + ": expected array");
      for (std::size_t ei = 0; ei < events.size(); ++ei) {
        m.events.push_back(event_from_json(events[ei], (mp / "events")[ei]));
      }
      sys.measures.push_back(std::move(m));
    }
    score.systems.push_back(std::move(sys));
  }
  return score;
}

// ---- Rows --------------------------------------------------------------

std::vector<SystemDetections> group_systems(const std::vector<SymbolDetection>& detections) {
  std::vector<SymbolDetection> notes;
  for (const auto& d : detections) {
    if (is_note_kind(d.kind)) notes.push_back(d);
  }
  std::vector<SystemDetections> rows;
  if (notes.empty()) return rows;

  const double tol = 0.5 * median_note_height(notes);
  std::sort(notes.begin(), notes.end(), [](const SymbolDetection& a, const SymbolDetection& b) {
    return std::tie(a.box.y0, a.box.x0) < std::tie(b.box.y0, b.box.x0);
  });
  for (const auto& n : notes) {
    if (rows.empty() || n.box.y0 > rows.back().y1 + tol) {
      rows.push_back({static_cast<double>(n.box.y0), static_cast<double>(n.box.y1), {}, {}});
    }
    auto& r = rows.back();
    r.y1 = std::max(r.y1, static_cast<double>(n.box.y1));
    r.notes.push_back(n);
  }
  for (auto& r : rows) {
    std::sort(r.notes.begin(), r.notes.end(), [](const SymbolDetection& a, const SymbolDetection& b) {
      return a.center.x != b.center.x ? a.center.x < b.center.x : a.center.y < b.center.y;
    });
  }
  for (const auto& d : detections) {
    if (is_note_kind(d.kind)) continue;
    std::size_t best = 0;
    double best_dist = 1e300;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const double y = d.center.y;
      const double dist = y < rows[i].y0 ? rows[i].y0 - y : (y > rows[i].y1 ? y - rows[i].y1 : 0.0);
      if (dist < best_dist) {
        best_dist = dist;
        best = i;
      }
    }
    rows[best].others.push_back(d);
  }
  return rows;
}

// ---- Attributes --------------------------------------------------------

Rational compute_duration(const NoteEvent& e) {
  Rational d{1, std::int64_t{1} << std::clamp(e.underline_count, 0, 30)};
  d += Rational(e.dash_count);
  if (e.augmentation_dots > 0) d *= Rational(3, 2);
  return d;
}

int compute_pitch(const NoteEvent& e, int key_root, int base_octave) {
  static constexpr std::array<int, 7> kMajor = {0, 2, 4, 5, 7, 9, 11};
  if (e.digit < 1 || e.digit > 7) throw std::invalid_argument("rest or invalid digit has no pitch");
  return kMajor[e.digit - 1] + 12 * (base_octave + 1 + e.octave_shift) + key_root;
}

std::vector<NoteEvent> resolve_note_attributes(const SystemDetections& system, double digit_height,
                                               const SemanticsConfig& cfg, std::vector<std::string>* warnings) {
  std::vector<NoteEvent> events;
  for (const auto& n : system.notes) {
    NoteEvent e;
    e.digit = n.value.value_or(n.kind == SymbolKind::rest ? 0 : 1);
    e.position = n.center;
    events.push_back(e);
  }
  if (events.empty()) return events;

  std::vector<IndexedPoint> pts;
  for (std::size_t i = 0; i < events.size(); ++i) pts.push_back({to_point(events[i].position), static_cast<int>(i)});
  const SpatialIndex index(std::move(pts));

  enum Role { octave, augmentation, underline, dash };
  struct Cand {
    double d;
    int sym;
    int note;
    Role role;
  };
  std::vector<Cand> cands;
  std::vector<int> tracked;
  for (int si = 0; si < static_cast<int>(system.others.size()); ++si) {
    const auto& s = system.others[si];
    const Point2 p = to_point(s.center);
    auto query = [&](Role role, const RelationMetric& rm, const PayloadFilter& filter) {
      for (const auto& nb : index.range(p, rm.in_pixels(digit_height), cfg.cutoff, filter)) {
        cands.push_back({nb.distance, si, nb.payload, role});
      }
    };
    switch (s.kind) {
      case SymbolKind::octave_dot:
      case SymbolKind::augmentation_dot:
        tracked.push_back(si);
        query(octave, cfg.octave, [&](int j) { return events[j].position.y != p.y; });
        query(augmentation, cfg.augmentation, [&](int j) { return events[j].position.x < p.x; });
        break;
      case SymbolKind::underline:
        tracked.push_back(si);
        query(underline, cfg.underline, [&](int j) { return events[j].position.y < p.y; });
        break;
      case SymbolKind::dash:
        tracked.push_back(si);
        query(dash, cfg.dash, [&](int j) { return events[j].position.x < p.x; });
        break;
      default:
        break;
    }
  }
  std::sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) {
    return std::tie(a.d, a.sym, a.note, a.role) < std::tie(b.d, b.sym, b.note, b.role);
  });
  std::vector<bool> used(system.others.size(), false);
  for (const auto& c : cands) {
    if (used[c.sym]) continue;
    NoteEvent& e = events[c.note];
    const auto& s = system.others[c.sym];
    switch (c.role) {
      case octave:
        if (e.is_rest()) continue;
        e.octave_shift += s.center.y < e.position.y ? 1 : -1;
        break;
      case augmentation:
        if (e.augmentation_dots >= 1) continue;
        e.augmentation_dots = 1;
        break;
      case underline:
        if (e.underline_count >= 3 || e.dash_count > 0) continue;
        ++e.underline_count;
        break;
      case dash:
        if (e.underline_count > 0) continue;
        ++e.dash_count;
        break;
    }
    used[c.sym] = true;
  }
  for (int si : tracked) {
    if (!used[si]) {
      const auto& s = system.others[si];
      warn(warnings, fmt::format("orphan {} at ({:.1f}, {:.1f}) dropped", to_string(s.kind), s.center.x, s.center.y));
    }
  }
  for (auto& e : events) {
    e.duration = compute_duration(e);
    if (!e.is_rest()) e.pitch = compute_pitch(e, cfg.key_root, cfg.base_octave);
  }
  return events;
}

// ---- Arcs --------------------------------------------------------------

void bind_ties_slurs(std::vector<NoteEvent>& events, const std::vector<SymbolDetection>& arcs,
                     double digit_height, const SemanticsConfig& cfg, int& next_slur_group,
                     std::vector<std::string>* warnings) {
  if (events.empty() || arcs.empty()) {
    for (const auto& a : arcs) {
      warn(warnings, fmt::format("arc at ({:.1f}, {:.1f}) has no notes", a.center.x, a.center.y));
    }
    return;
  }
  std::vector<IndexedPoint> pts;
  for (std::size_t i = 0; i < events.size(); ++i) pts.push_back({to_point(events[i].position), static_cast<int>(i)});
  const SpatialIndex index(std::move(pts));
  const EllipticalMetric metric = cfg.tie.in_pixels(digit_height);

  std::vector<SymbolDetection> ordered = arcs;
  std::sort(ordered.begin(), ordered.end(), [](const SymbolDetection& a, const SymbolDetection& b) {
    return std::tie(a.box.x0, a.box.y0) < std::tie(b.box.x0, b.box.y0);
  });
  for (const auto& arc : ordered) {
    auto bind_end = [&](double x, double y) -> std::optional<int> {
      const Point2 p{x, y};
      const auto hits = index.range(p, metric, cfg.cutoff, [&](int j) { return events[j].position.y > y; });
      if (hits.empty()) return std::nullopt;
      return hits.front().payload;
    };
    const double y = arc.box.y1 - 1;
    const auto left = bind_end(arc.box.x0, y);
    const auto right = bind_end(arc.box.x1 - 1, y);
    if (!left || !right || *left == *right) {
      warn(warnings, fmt::format("arc at ({:.1f}, {:.1f}) dropped: endpoints not on two notes", arc.center.x,
                                 arc.center.y));
      continue;
    }
    int a = *left, b = *right;
    if (events[a].position.x > events[b].position.x) std::swap(a, b);
    if (events[a].pitch && events[a].pitch == events[b].pitch) {
      events[a].tie_to_next = true;
      continue;
    }
    const int group = next_slur_group++;
    const double xa = events[a].position.x, xb = events[b].position.x;
    for (auto& e : events) {
      if (e.position.x >= xa && e.position.x <= xb && !e.slur_group) e.slur_group = group;
    }
  }
}

// ---- Lyrics ------------------------------------------------------------

std::vector<LyricChar> align_lyrics(std::vector<NoteEvent>& events, const std::vector<LyricChar>& chars,
                                    double digit_height, const SemanticsConfig& cfg) {
  if (chars.empty()) return {};
  std::vector<IndexedPoint> pts;
  for (std::size_t i = 0; i < events.size(); ++i) {
    if (!events[i].is_rest()) pts.push_back({to_point(events[i].position), static_cast<int>(i)});
  }
  if (pts.empty()) return chars;
  const SpatialIndex index(std::move(pts));
  const EllipticalMetric metric = cfg.lyric.in_pixels(digit_height);

  struct Cand {
    double d;
    int ch;
    int note;
  };
  std::vector<Cand> cands;
  for (int ci = 0; ci < static_cast<int>(chars.size()); ++ci) {
    const Point2 p = to_point(chars[ci].center);
    for (const auto& nb : index.range(p, metric, cfg.cutoff, [&](int j) { return events[j].position.y < p.y; })) {
      cands.push_back({nb.distance, ci, nb.payload});
    }
  }
  std::sort(cands.begin(), cands.end(),
            [](const Cand& a, const Cand& b) { return std::tie(a.d, a.ch, a.note) < std::tie(b.d, b.ch, b.note); });
  std::vector<bool> char_used(chars.size(), false);
  std::vector<bool> note_used(events.size(), false);
  for (const auto& c : cands) {
    if (char_used[c.ch] || note_used[c.note]) continue;
    events[c.note].lyric = chars[c.ch].text;
    char_used[c.ch] = true;
    note_used[c.note] = true;
  }
  std::vector<LyricChar> leftover;
  for (std::size_t i = 0; i < chars.size(); ++i) {
    if (!char_used[i]) leftover.push_back(chars[i]);
  }
  return leftover;
}

// ---- Measures ----------------------------------------------------------

std::vector<Measure> assemble_measures(const std::vector<NoteEvent>& events, std::vector<double> barlines) {
  std::sort(barlines.begin(), barlines.end());
  std::vector<NoteEvent> sorted = events;
  std::stable_sort(sorted.begin(), sorted.end(),
                   [](const NoteEvent& a, const NoteEvent& b) { return a.position.x < b.position.x; });
  std::vector<Measure> measures;
  Measure current;
  std::size_t bar = 0;
  auto close = [&](std::optional<double> barline_x) {
    if (current.events.empty()) return;
    current.barline_x = barline_x;
    measures.push_back(std::move(current));
    current = Measure{};
  };
  for (const auto& e : sorted) {
    while (bar < barlines.size() && barlines[bar] < e.position.x) {
      close(barlines[bar]);
      ++bar;
    }
    current.events.push_back(e);
    current.length += e.duration;
  }
  close(bar < barlines.size() ? std::optional<double>(barlines[bar]) : std::nullopt);
  return measures;
}

// ---- Page --------------------------------------------------------------

SemanticsResult build_score(const std::vector<SymbolDetection>& detections, const FontMetrics& metrics,
                            const SemanticsConfig& cfg, const std::vector<LyricChar>& lyrics) {
  SemanticsResult result;
  result.score.key_root = cfg.key_root;
  result.score.base_octave = cfg.base_octave;
  result.score.beats_per_measure = cfg.beats_per_measure;

  const auto rows = group_systems(detections);
  const double h = metrics.digit_height;

  std::vector<std::vector<LyricChar>> row_lyrics(rows.size());
  for (const auto& ch : lyrics) {
    if (rows.empty()) break;
    std::size_t best = 0;
    double best_dist = 1e300;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const double dist = std::abs(ch.center.y - (rows[i].y1 + 1.25 * h));
      if (dist < best_dist) {
        best_dist = dist;
        best = i;
      }
    }
    row_lyrics[best].push_back(ch);
  }
  if (rows.empty()) result.unbound_lyrics = lyrics;

  int next_slur = 0;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto& row = rows[r];
    auto events = resolve_note_attributes(row, h, cfg, &result.warnings);
    std::vector<SymbolDetection> arcs;
    std::vector<double> barlines;
    for (const auto& d : row.others) {
      if (d.kind == SymbolKind::tie_slur) arcs.push_back(d);
      if (d.kind == SymbolKind::barline) barlines.push_back(d.center.x);
    }
    bind_ties_slurs(events, arcs, h, cfg, next_slur, &result.warnings);
    auto leftover = align_lyrics(events, row_lyrics[r], h, cfg);
    result.unbound_lyrics.insert(result.unbound_lyrics.end(), leftover.begin(), leftover.end());
    System sys;
    sys.measures = assemble_measures(events, barlines);
    result.score.systems.push_back(std::move(sys));
  }
  return result;
}

}  // namespace jianpu
