#pragma once

#include <array>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "jianpu/imaging.hpp"
#include "jianpu/morphoskel.hpp"

namespace jianpu {

enum class SymbolKind {
  digit,
  rest,
  octave_dot,
  augmentation_dot,
  underline,
  dash,
  barline,
  tie_slur,
  lyric_candidate,
};

std::string to_string(SymbolKind kind);
SymbolKind symbol_kind_from_string(const std::string& name);
inline bool is_note_kind(SymbolKind k) { return k == SymbolKind::digit || k == SymbolKind::rest; }
inline bool is_dot_kind(SymbolKind k) {
  return k == SymbolKind::octave_dot || k == SymbolKind::augmentation_dot;
}

struct SymbolDetection {
  SymbolKind kind = SymbolKind::digit;
  std::optional<int> value;  // 1..7 for digits, 0 for rests
  BoundingBox box;
  double score = 0.0;
  PointF center;
};

struct DetectionPage {
  std::string page;
  std::vector<SymbolDetection> detections;
};

nlohmann::json to_json(const DetectionPage& page);
DetectionPage detection_page_from_json(const nlohmann::json& doc);

struct FontMetrics {
  double digit_width = 18.0;
  double digit_height = 30.0;
  [[nodiscard]] double digit_area() const { return digit_width * digit_height; }
};

struct DigitTemplate {
  int digit = 0;
  FloatRaster raster;     // zero-mean, unit L2 norm
  BoundingBox ink_box;    // glyph ink inside the template cell
  int anchor_x = 0;       // cell centre
  int anchor_y = 0;
};

struct TemplateSet {
  std::array<DigitTemplate, 8> templates;
  double sigma = 1.2;
  [[nodiscard]] FontMetrics seed_metrics() const;
};

/// LoG(glyph) + accent, then mean-subtracted and L2-normalised. Every
/// digit 0..7 must be supplied; accent masks are optional per digit but
/// must match their glyph's dimensions.
TemplateSet build_template_set(const std::map<int, GrayImage>& glyphs, double sigma,
                               const std::map<int, FloatRaster>& accent_masks = {});

/// Loads <dir>/digits/<d>.png glyphs and optional <dir>/accents/<d>.pgm.
TemplateSet load_template_set(const std::filesystem::path& asset_dir, double sigma);

/// Normalised cross-correlation of the template against the LoG-filtered
/// page, valid region only: entry (y, x) places the template's top-left
/// corner at page pixel (x, y). Values lie in [-1, 1]; windows with no
/// signal give 0.
FloatRaster correlate(const FloatRaster& log_page, const DigitTemplate& tmpl);
FloatRaster correlate(const GrayImage& page, const DigitTemplate& tmpl, double sigma);

struct Peak {
  int x = 0;
  int y = 0;
  double score = 0.0;
};

/// Pixels >= threshold that are the maximum of the response within
/// nms_radius (ties resolved in favour of the earlier (y, x)).
std::vector<Peak> extract_peaks(const FloatRaster& response, double threshold, double nms_radius);

struct DigitDetectOptions {
  double threshold = 0.55;
  /// Non-maximum suppression radius as a fraction of the digit width.
  double nms_fraction = 0.6;
  /// Cross-digit suppression IoU.
  double overlap_iou = 0.3;
  /// Binarization level for the barline veto: a candidate overlapping a
  /// thin ink component taller than itself is dropped.
  double stroke_threshold = 0.3;
};

std::vector<SymbolDetection> detect_digits(const GrayImage& page, const TemplateSet& templates,
                                           const DigitDetectOptions& opts = {});

/// Median detected digit box dims, or the fallback when nothing was found.
FontMetrics estimate_font_metrics(const std::vector<SymbolDetection>& digits,
                                  const FontMetrics& fallback);

struct StructuralOptions {
  double binarize_threshold = 0.35;
  double dot_area_min = 0.02;   // x digit area
  double dot_area_max = 0.3;
  double dot_aspect_min = 0.5;
  double dot_aspect_max = 2.0;
  double line_height_max = 0.25;   // x digit height
  double line_width_min = 0.6;     // x digit width
  double barline_height_min = 1.2; // x digit height
  double band_below = 0.75;        // x digit height under the digit bottom
  double band_above = 0.75;        // x digit height over the digit top
};

std::vector<SymbolDetection> detect_structural(const GrayImage& page,
                                               const std::vector<SymbolDetection>& digits,
                                               const FontMetrics& metrics,
                                               const StructuralOptions& opts = {});

struct ChainGeometry {
  double span_x = 0.0;
  double span_y = 0.0;
  double flatness = 0.0;
  bool arc_up = true;
  double sagitta = 0.0;  // max distance from the chord
  int dy_sign_changes = 0;
  double start_slope_deg = 0.0;
  double end_slope_deg = 0.0;
};

ChainGeometry analyze_chain(const Chain& smoothed_chain);

struct TieSlurOptions {
  double binarize_threshold = 0.5;
  int close_radius = 2;
  int open_radius = 1;
  int smooth_window = 7;
  double min_span = 1.2;        // x digit width
  double max_flatness = 0.5;
  double min_sagitta_px = 2.0;
  double min_sagitta_ratio = 0.04;  // of span_x
  int max_sign_changes = 1;
};

bool accept_tie_slur(const ChainGeometry& geom, const FontMetrics& metrics,
                     const TieSlurOptions& opts = {});

std::vector<SymbolDetection> detect_ties_slurs(const GrayImage& page, const FontMetrics& metrics,
                                               const TieSlurOptions& opts = {});

}  // namespace jianpu
