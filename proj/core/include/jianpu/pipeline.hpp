#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "jianpu/config.hpp"
#include "jianpu/embedding_table.hpp"
#include "jianpu/lyricocr.hpp"
#include "jianpu/semantics.hpp"
#include "jianpu/symboldetect.hpp"

namespace jianpu {

/// Same rounding as a PNG save/load round trip, so staged runs through
/// files reproduce the in-memory run.
GrayImage quantize_8bit(const GrayImage& img);

struct PreprocessOutcome {
  GrayImage image;
  double angle = 0.0;
  std::optional<LightingProfile> lighting;
};

PreprocessOutcome preprocess_page(const GrayImage& page, const PipelineConfig& cfg);

struct PageResult {
  std::string id;
  PreprocessOutcome pre;
  FontMetrics metrics;
  DetectionPage detections;
  std::vector<Recognition> lyrics;
  bool lyrics_ran = false;
  SemanticsResult semantics;
  std::string musicxml;
  std::vector<std::uint8_t> midi;
  std::vector<std::pair<std::string, double>> timings_ms;
  std::vector<std::string> warnings;
};

/// Detection-level JSON: the detection page plus metrics and, when the
/// lyric stage ran, its recognitions.
nlohmann::json detections_to_json(const PageResult& result);

/// Rebuilds the score from a detections JSON document (as written by
/// detections_to_json).
SemanticsResult score_from_detections(const nlohmann::json& doc, const SemanticsConfig& cfg);

/// Loaded assets plus the per-page stage chain. Thread-safe after
/// construction.
class Pipeline {
 public:
  Pipeline(PipelineConfig cfg, bool with_lyrics);

  [[nodiscard]] const PipelineConfig& config() const { return cfg_; }
  [[nodiscard]] bool with_lyrics() const { return with_lyrics_; }
  [[nodiscard]] const TemplateSet& templates() const { return templates_; }
  [[nodiscard]] const HanziTemplateTable* hanzi() const { return hanzi_.get(); }

  /// Full chain on an unprocessed page.
  [[nodiscard]] PageResult process(const GrayImage& page, const std::string& id) const;
  /// Everything after preprocessing.
  [[nodiscard]] PageResult process_preprocessed(PreprocessOutcome pre, const std::string& id) const;

  [[nodiscard]] std::vector<Recognition> recognize_lyrics(const GrayImage& preprocessed,
                                                          const std::vector<SymbolDetection>& music,
                                                          const FontMetrics& metrics, const std::string& id) const;

 private:
  PipelineConfig cfg_;
  bool with_lyrics_;
  TemplateSet templates_;
  std::unique_ptr<HanziTemplateTable> hanzi_;
  std::unique_ptr<EmbeddingTable> embeddings_;
};

struct ManifestEntry {
  std::string page;
  std::string input;
  bool ok = false;
  std::string error;
  double angle = 0.0;
  std::size_t notes = 0;
  std::size_t lyric_chars = 0;
  std::vector<std::pair<std::string, double>> timings_ms;
  std::vector<std::string> outputs;
  std::vector<std::string> warnings;
};

struct RunManifest {
  std::vector<ManifestEntry> pages;
  [[nodiscard]] int failures() const;
  /// `with_timings` false gives a run-independent document.
  [[nodiscard]] nlohmann::json to_json(bool with_timings = true) const;
};

struct RunOptions {
  std::filesystem::path out_dir;
  bool with_lyrics = false;
  bool write_manifest = true;
};

/// Processes every page on a pool of cfg.jobs workers. A page that throws
/// is recorded as failed and the run continues. Entries keep input order.
RunManifest run(const PipelineConfig& cfg, const std::vector<std::filesystem::path>& pages,
                const RunOptions& opts);
RunManifest run(const Pipeline& pipeline, const std::vector<std::filesystem::path>& pages, const RunOptions& opts);

/// Writes <id>.score.json, <id>.detections.json, <id>.musicxml, <id>.mid and
/// <id>.lyrics.json when lyrics ran. Returns the file names.
std::vector<std::string> write_page_outputs(const PageResult& result, const std::filesystem::path& dir);

/// Page ids are file stems.
std::string page_id(const std::filesystem::path& path);

}  // namespace jianpu
