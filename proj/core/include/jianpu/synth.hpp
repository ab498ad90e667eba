#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "jianpu/config.hpp"
#include "jianpu/evalkit.hpp"
#include "jianpu/imaging.hpp"
#include "jianpu/lyricocr.hpp"
#include "jianpu/semantics.hpp"

namespace jianpu {

/// Seeded fixture renderer. Every page comes with its own ground truth, so
/// the rendered corpus is the oracle for end-to-end checks.
struct SynthOptions {
  int width = 1400;
  int systems = 6;
  int margin = 60;
  bool lyrics = false;
  std::size_t lyric_charset_limit = 1000;
  double max_skew_degrees = 0.0;
  double noise_sigma = 0.03;
  bool arcs = true;
  int key_root = 0;
  int base_octave = 4;
};

struct SynthAssets {
  std::map<int, GrayImage> digits;  // 0..7, ink-bright glyph cells
  GlyphSource glyphs;
  std::vector<std::string> charset;
};

/// Digits from the template directory, plus the glyph atlas and charset.
SynthAssets load_synth_assets(const AssetPaths& paths, std::size_t charset_limit = 3500);

struct SynthPage {
  std::string id;
  GrayImage image;
  ScoreGraph truth;
  std::vector<LyricTruth> lyrics;
  double skew_degrees = 0.0;
  double digit_height = 0.0;
};

SynthPage render_page(const SynthAssets& assets, const SynthOptions& opts, std::uint64_t seed,
                      const std::string& id = "page");

/// Page `i` of a corpus uses a seed derived from (seed, i).
std::vector<SynthPage> render_corpus(const SynthAssets& assets, const SynthOptions& opts, int pages,
                                     std::uint64_t seed);

/// Writes <id>.png, <id>.truth.json, <id>.lyrics.json (when lyrics are on)
/// and an index.json listing them.
void write_corpus(const std::vector<SynthPage>& pages, const std::filesystem::path& dir);

nlohmann::json lyric_truth_to_json(const std::string& page, const std::vector<LyricTruth>& chars);

/// Lines of random word blocks, rotated by `degrees`. For deskew checks.
GrayImage render_ruled_page(int height, int width, double degrees, std::uint64_t seed);

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t index);

}  // namespace jianpu
