#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "jianpu/lyricocr.hpp"
#include "jianpu/preprocess.hpp"
#include "jianpu/scorexport.hpp"
#include "jianpu/semantics.hpp"
#include "jianpu/symboldetect.hpp"

namespace jianpu {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct AssetPaths {
  std::filesystem::path root;  // empty: $JIANPU_ASSET_DIR, then the build default
  std::filesystem::path templates;
  std::filesystem::path charset;
  std::filesystem::path glyph_atlas;
  std::filesystem::path embedding_table;  // optional

  [[nodiscard]] std::filesystem::path resolved_root() const;
  [[nodiscard]] std::filesystem::path templates_dir() const;
  [[nodiscard]] std::filesystem::path charset_file() const;
  [[nodiscard]] std::filesystem::path atlas_dir() const;
};

struct PipelineConfig {
  AssetPaths assets;
  bool lighting_enabled = true;
  LightingTargets lighting;
  bool deskew_enabled = true;
  DeskewOptions deskew;
  double log_sigma = 1.2;
  DigitDetectOptions digits;
  StructuralOptions structural;
  TieSlurOptions ties;
  SemanticsConfig semantics;
  LyricOptions lyrics;
  double lyric_em_ratio = 0.9;  // lyric em as a fraction of the digit height
  std::size_t charset_limit = 3500;
  bool fast = false;            // skip skeleton matching
  ExportOptions export_opts;
  int jobs = 1;
  unsigned seed = 0;

  /// Throws ConfigError describing the first violated constraint.
  void validate() const;
};

nlohmann::json config_to_json(const PipelineConfig& cfg);

/// Starts from the defaults; unknown keys and type mismatches are errors.
PipelineConfig config_from_json(const nlohmann::json& doc);
PipelineConfig load_config(const std::filesystem::path& path);

/// Applies "dotted.key=value" overrides. Values parse as JSON when they can,
/// otherwise as strings.
PipelineConfig apply_overrides(const PipelineConfig& cfg, const std::vector<std::string>& overrides);

}  // namespace jianpu
