#pragma once

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "jianpu/anisoindex.hpp"
#include "jianpu/rational.hpp"
#include "jianpu/symboldetect.hpp"

namespace jianpu {

class ScoreFormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct NoteEvent {
  int digit = 1;
  int octave_shift = 0;
  int underline_count = 0;
  int dash_count = 0;
  int augmentation_dots = 0;
  bool tie_to_next = false;
  std::optional<int> slur_group;
  std::optional<std::string> lyric;
  PointF position;
  Rational duration{1};
  std::optional<int> pitch;

  [[nodiscard]] bool is_rest() const { return digit == 0; }
  friend bool operator==(const NoteEvent&, const NoteEvent&) = default;
};

struct Measure {
  std::vector<NoteEvent> events;
  Rational length{0};
  std::optional<double> barline_x;  // closing barline, absent for an open last measure
  friend bool operator==(const Measure&, const Measure&) = default;
};

struct System {
  std::vector<Measure> measures;
  friend bool operator==(const System&, const System&) = default;
};

struct ScoreGraph {
  static constexpr int kFormatVersion = 1;

  std::vector<System> systems;
  int key_root = 0;
  int base_octave = 4;
  Rational beats_per_measure{4};
  std::string title;

  [[nodiscard]] std::size_t event_count() const;
  [[nodiscard]] Rational total_beats() const;
  friend bool operator==(const ScoreGraph&, const ScoreGraph&) = default;
};

nlohmann::json score_to_json(const ScoreGraph& score);
/// Throws ScoreFormatError naming the offending field path.
ScoreGraph score_from_json(const nlohmann::json& doc);

/// Semi-axes in digit-height units.
struct RelationMetric {
  double r_x = 1.0;
  double r_y = 1.0;
  [[nodiscard]] EllipticalMetric in_pixels(double digit_height) const {
    return {r_x * digit_height, r_y * digit_height};
  }
};

struct SemanticsConfig {
  RelationMetric octave{0.4, 1.2};
  RelationMetric augmentation{1.2, 0.35};
  RelationMetric underline{0.6, 1.0};
  RelationMetric dash{8.0, 0.5};
  RelationMetric lyric{0.5, 2.0};
  RelationMetric tie{0.6, 2.0};
  double cutoff = 1.0;
  int key_root = 0;
  int base_octave = 4;
  Rational beats_per_measure{4};
};

/// One row of music: its notes plus every other detection assigned to it.
struct SystemDetections {
  double y0 = 0.0;
  double y1 = 0.0;
  std::vector<SymbolDetection> notes;
  std::vector<SymbolDetection> others;
};

/// Clusters digits/rests into rows by gaps in their vertical extents and
/// assigns each non-note detection to the nearest row band. Rows come out
/// top to bottom, notes inside a row left to right.
std::vector<SystemDetections> group_systems(const std::vector<SymbolDetection>& detections);

/// Binds dots, underlines and dashes to notes with per-relation elliptical
/// metrics and greedy ascending-distance assignment; fills duration and
/// pitch. Orphans are reported through `warnings`.
std::vector<NoteEvent> resolve_note_attributes(const SystemDetections& system, double digit_height,
                                               const SemanticsConfig& cfg,
                                               std::vector<std::string>* warnings = nullptr);

Rational compute_duration(const NoteEvent& event);
/// Throws std::invalid_argument for rests.
int compute_pitch(const NoteEvent& event, int key_root, int base_octave);

/// Arcs bind by their lower corners to the note below each end. Equal pitch
/// sets tie_to_next on the left note; otherwise every note between the two
/// ends shares a new slur group. `next_slur_group` is advanced.
void bind_ties_slurs(std::vector<NoteEvent>& events, const std::vector<SymbolDetection>& arcs,
                     double digit_height, const SemanticsConfig& cfg, int& next_slur_group,
                     std::vector<std::string>* warnings = nullptr);

struct LyricChar {
  std::string text;
  PointF center;
};

/// Returns the characters left unbound.
std::vector<LyricChar> align_lyrics(std::vector<NoteEvent>& events, const std::vector<LyricChar>& chars,
                                    double digit_height, const SemanticsConfig& cfg);

/// Splits x-ordered events at the barline x positions.
std::vector<Measure> assemble_measures(const std::vector<NoteEvent>& events, std::vector<double> barlines);

struct SemanticsResult {
  ScoreGraph score;
  std::vector<std::string> warnings;
  std::vector<LyricChar> unbound_lyrics;
};

/// Full page interpretation: rows, attributes, arcs, lyrics, measures.
SemanticsResult build_score(const std::vector<SymbolDetection>& detections, const FontMetrics& metrics,
                            const SemanticsConfig& cfg, const std::vector<LyricChar>& lyrics = {});

}  // namespace jianpu
