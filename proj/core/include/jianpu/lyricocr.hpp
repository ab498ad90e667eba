#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "jianpu/charsim.hpp"
#include "jianpu/embedding_table.hpp"
#include "jianpu/imaging.hpp"

namespace jianpu {

struct CharCandidate {
  BoundingBox box;   // merged ink box
  BoundingBox cell;  // ink box grown to the minimum cell size, clipped to the page
  GrayImage patch;   // crop of the page at `cell`
  int merged_from = 1;
};

struct CandidateOptions {
  std::vector<double> thresholds{0.3, 0.5, 0.7};
  double em_px = 27.0;
  double merge_iou = 0.4;
  double merge_center_em = 0.5;
  double max_merged_em = 1.2;
  double min_cell_em = 0.8;
  double aspect_min = 0.6;
  double aspect_max = 1.6;
  double size_min_em = 0.6;
  double size_max_em = 1.4;
  double density_min = 0.05;
  double density_max = 0.6;
  int min_component_area = 3;
};

/// Pools connected components over every threshold, merges them into
/// character clusters and keeps the clusters passing the Hanzi shape rules.
/// Output ordered by (y0, x0).
std::vector<CharCandidate> extract_candidates(const GrayImage& page, const CandidateOptions& opts = {});

/// Patch scaled so its ink box's longer side is `fit` px, centred on a
/// `canvas` x `canvas` square.
GrayImage normalize_patch(const GrayImage& patch, int canvas = 48, int fit = 40, float ink_threshold = 0.3f);

struct HanziTemplate {
  std::string character;
  GrayImage patch;  // normalised
  std::vector<PointF> skeleton;
  GrayImage half;
  int rank = 0;
};

struct HanziTemplateTable {
  std::vector<HanziTemplate> entries;
  std::string font_name;
  int font_size = 0;
  int canvas = 48;
};

/// UTF-8 lines, one character each, frequency order.
std::vector<std::string> load_charset(const std::filesystem::path& path, std::size_t limit = 0);

/// Lowercase hex codepoint (at least 4 digits) of a single UTF-8 character.
std::optional<std::string> codepoint_hex(const std::string& ch);
/// Inverse of codepoint_hex.
std::optional<std::string> utf8_from_hex(const std::string& hex);

/// Glyph source: returns the ink-bright glyph for a character, or nullopt.
using GlyphSource = std::function<std::optional<GrayImage>(const std::string& ch)>;

/// Atlas directory with <lowercase hex codepoint>.png per character.
GlyphSource atlas_glyph_source(const std::filesystem::path& atlas_dir);

/// Throws std::invalid_argument on duplicate characters; characters the
/// source cannot render are skipped with a warning.
HanziTemplateTable build_template_table(const std::vector<std::string>& charset, const GlyphSource& glyphs,
                                        const std::string& font_name = "atlas", int font_size = 48);

struct MatchOptions {
  int k1 = 64;
  double prior_r0 = 3000.0;
  bool use_prior = true;
  CompareOptions compare;
};

struct Recognition {
  std::string character;
  double score = 0.0;
  BoundingBox box;
  std::string runner_up;
  double runner_up_score = 0.0;
};

struct PreparedCandidate {
  GrayImage patch;  // normalised
  GrayImage half;
  std::vector<PointF> skeleton;
};

PreparedCandidate prepare_candidate(const GrayImage& patch, int canvas = 48);

/// Stage-1 survivors: indices into the table, best first.
std::vector<int> prune_templates(const PreparedCandidate& cand, const HanziTemplateTable& table,
                                 const MatchOptions& opts);

/// Embedding vectors are looked up by `candidate_id` and by character when
/// a table is given.
Recognition match_character(const CharCandidate& candidate, const HanziTemplateTable& table,
                            const MatchOptions& opts, const EmbeddingTable* embeddings = nullptr,
                            const std::string& candidate_id = {});

/// Fused similarity against every entry (no pruning); used for pruning
/// audits and calibration.
std::vector<double> full_scan_scores(const PreparedCandidate& cand, const HanziTemplateTable& table,
                                     const CompareOptions& opts);

struct LyricOptions {
  CandidateOptions candidates;
  MatchOptions match;
  double accept_threshold = 0.45;
  double overlap_iou = 0.1;
};

std::vector<Recognition> recognize_page(const GrayImage& page, const HanziTemplateTable& table,
                                        const LyricOptions& opts, const EmbeddingTable* embeddings = nullptr,
                                        const std::string& page_id = {});

struct CalibrationSample {
  GrayImage patch;
  std::string label;
};

struct CalibrationResult {
  FusionParams params;
  double accuracy = 0.0;           // top-1 with `params`
  double baseline_accuracy = 0.0;  // top-1 with the starting params
  int samples = 0;
};

/// Grid search over fusion weights (simplex, step `weight_step`) and
/// per-metric gammas, scoring top-1 accuracy over the stage-1 survivors.
/// Ties prefer the larger mean margin of the true label. The embedding
/// weight stays at zero.
CalibrationResult calibrate_fusion(const std::vector<CalibrationSample>& samples, const HanziTemplateTable& table,
                                   const MatchOptions& opts, double weight_step = 0.1,
                                   const std::vector<double>& gamma_grid = {0.5, 1.0, 2.0});

nlohmann::json recognitions_to_json(const std::string& page, const std::vector<Recognition>& recs);
std::vector<Recognition> recognitions_from_json(const nlohmann::json& doc);

}  // namespace jianpu
