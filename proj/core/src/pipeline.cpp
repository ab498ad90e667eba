#include "jianpu/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <mutex>
#include <thread>

#include <spdlog/spdlog.h>

#include "jianpu/scorexport.hpp"

namespace jianpu {

namespace fs = std::filesystem;
using nlohmann::json;

GrayImage quantize_8bit(const GrayImage& img) {
  FloatRaster r = img.to_raster();
  for (float& v : r.data) v = static_cast<float>(1.0 - std::lround((1.0 - v) * 255.0) / 255.0);
  return GrayImage(std::move(r));
}

PreprocessOutcome preprocess_page(const GrayImage& page, const PipelineConfig& cfg) {
  PreprocessOutcome out;
  GrayImage img = page;
  if (cfg.lighting_enabled) {
    out.lighting = estimate_lighting(img, cfg.lighting);
    img = dual_gamma(img, *out.lighting);
  }
  if (cfg.deskew_enabled) {
    DeskewResult d = deskew(img, cfg.deskew);
    out.angle = d.angle;
    img = std::move(d.corrected);
  }
  out.image = quantize_8bit(img);
  return out;
}

namespace {

class StageClock {
 public:
  explicit StageClock(std::vector<std::pair<std::string, double>>& sink) : sink_(sink) {}
  void lap(const char* stage) {
    const auto now = std::chrono::steady_clock::now();
    sink_.emplace_back(stage, std::chrono::duration<double, std::milli>(now - last_).count());
    last_ = now;
  }

 private:
  std::vector<std::pair<std::string, double>>& sink_;
  std::chrono::steady_clock::time_point last_ = std::chrono::steady_clock::now();
};

std::vector<LyricChar> lyric_chars(const std::vector<Recognition>& recs) {
  std::vector<LyricChar> out;
  for (const auto& r : recs) out.push_back({r.character, {r.box.center_x(), r.box.center_y()}});
  return out;
}

FontMetrics metrics_json_or(const json& doc, const std::vector<SymbolDetection>& dets) {
  if (doc.contains("metrics")) {
    const auto& m = doc.at("metrics");
    return {m.at("digit_width").get<double>(), m.at("digit_height").get<double>()};
  }
  std::vector<SymbolDetection> digits;
  for (const auto& d : dets) {
    if (is_note_kind(d.kind)) digits.push_back(d);
  }
  return estimate_font_metrics(digits, FontMetrics{});
}

}  // namespace

json detections_to_json(const PageResult& r) {
  json j = to_json(r.detections);
  j["metrics"] = {{"digit_width", r.metrics.digit_width}, {"digit_height", r.metrics.digit_height}};
  j["deskew_angle"] = r.pre.angle;
  if (r.lyrics_ran) j["lyrics"] = recognitions_to_json(r.id, r.lyrics);
  return j;
}

SemanticsResult score_from_detections(const json& doc, const SemanticsConfig& cfg) {
  const DetectionPage page = detection_page_from_json(doc);
  const FontMetrics metrics = metrics_json_or(doc, page.detections);
  std::vector<LyricChar> chars;
  if (doc.contains("lyrics")) chars = lyric_chars(recognitions_from_json(doc.at("lyrics")));
  SemanticsResult res = build_score(page.detections, metrics, cfg, chars);
  res.score.title = page.page;
  res.score.key_root = cfg.key_root;
  res.score.base_octave = cfg.base_octave;
  res.score.beats_per_measure = cfg.beats_per_measure;
  return res;
}

Pipeline::Pipeline(PipelineConfig cfg, bool with_lyrics) : cfg_(std::move(cfg)), with_lyrics_(with_lyrics) {
  cfg_.validate();
  templates_ = load_template_set(cfg_.assets.templates_dir(), cfg_.log_sigma);
  if (!cfg_.assets.embedding_table.empty()) {
    embeddings_ = std::make_unique<EmbeddingTable>(EmbeddingTable::load(cfg_.assets.embedding_table));
  }
  if (with_lyrics_) {
    const auto charset = load_charset(cfg_.assets.charset_file(), cfg_.charset_limit);
    hanzi_ = std::make_unique<HanziTemplateTable>(
        build_template_table(charset, atlas_glyph_source(cfg_.assets.atlas_dir())));
    spdlog::debug("hanzi template table: {} entries", hanzi_->entries.size());
  }
}

PageResult Pipeline::process(const GrayImage& page, const std::string& id) const {
  const auto t0 = std::chrono::steady_clock::now();
  PreprocessOutcome pre = preprocess_page(page, cfg_);
  const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  PageResult r = process_preprocessed(std::move(pre), id);
  r.timings_ms.insert(r.timings_ms.begin(), {"preprocess", ms});
  return r;
}

std::vector<Recognition> Pipeline::recognize_lyrics(const GrayImage& preprocessed,
                                                    const std::vector<SymbolDetection>& music,
                                                    const FontMetrics& metrics, const std::string& id) const {
  if (!hanzi_) throw std::logic_error("pipeline built without the lyric stage");
  // Blank each music row across its full extent, then every symbol box.
  FloatRaster masked = preprocessed.to_raster();
  auto blank = [&](const BoundingBox& b) {
    const int pad = 2;
    for (int y = std::max(0, b.y0 - pad); y < std::min(masked.height, b.y1 + pad); ++y) {
      for (int x = std::max(0, b.x0 - pad); x < std::min(masked.width, b.x1 + pad); ++x) masked(y, x) = 0.0f;
    }
  };
  for (const auto& row : group_systems(music)) {
    bool first = true;
    BoundingBox ext;
    for (const auto* list : {&row.notes, &row.others}) {
      for (const auto& d : *list) {
        ext = first ? d.box : united(ext, d.box);
        first = false;
      }
    }
    if (!first) blank(ext);
  }
  for (const auto& d : music) blank(d.box);
  LyricOptions opts = cfg_.lyrics;
  opts.candidates.em_px = cfg_.lyric_em_ratio * metrics.digit_height;
  opts.match.compare.use_skeleton = !cfg_.fast;
  return recognize_page(GrayImage(std::move(masked)), *hanzi_, opts, embeddings_.get(), id);
}

PageResult Pipeline::process_preprocessed(PreprocessOutcome pre, const std::string& id) const {
  PageResult r;
  r.id = id;
  r.pre = std::move(pre);
  StageClock clock(r.timings_ms);
  const GrayImage& img = r.pre.image;

  auto digits = detect_digits(img, templates_, cfg_.digits);
  clock.lap("digits");
  r.metrics = estimate_font_metrics(digits, templates_.seed_metrics());
  auto structural = detect_structural(img, digits, r.metrics, cfg_.structural);
  clock.lap("structural");
  auto arcs = detect_ties_slurs(img, r.metrics, cfg_.ties);
  clock.lap("ties_slurs");

  r.detections.page = id;
  r.detections.detections = digits;
  r.detections.detections.insert(r.detections.detections.end(), structural.begin(), structural.end());
  r.detections.detections.insert(r.detections.detections.end(), arcs.begin(), arcs.end());
  if (digits.empty()) r.warnings.push_back("no digits detected; emitting an empty score");

  if (with_lyrics_) {
    r.lyrics = recognize_lyrics(img, r.detections.detections, r.metrics, id);
    r.lyrics_ran = true;
    clock.lap("lyrics");
  }

  r.semantics = score_from_detections(detections_to_json(r), cfg_.semantics);
  r.warnings.insert(r.warnings.end(), r.semantics.warnings.begin(), r.semantics.warnings.end());
  if (!r.semantics.unbound_lyrics.empty()) {
    r.warnings.push_back(std::to_string(r.semantics.unbound_lyrics.size()) + " lyric characters left unbound");
  }
  clock.lap("semantics");

  r.musicxml = to_musicxml(r.semantics.score, cfg_.export_opts);
  r.midi = to_midi(r.semantics.score, cfg_.export_opts);
  clock.lap("export");
  return r;
}

int RunManifest::failures() const {
  return static_cast<int>(std::count_if(pages.begin(), pages.end(), [](const ManifestEntry& e) { return !e.ok; }));
}

json RunManifest::to_json(bool with_timings) const {
  json arr = json::array();
  for (const auto& e : pages) {
    json j = {{"page", e.page},       {"input", e.input},     {"ok", e.ok},
              {"angle", e.angle},     {"notes", e.notes},     {"lyric_chars", e.lyric_chars},
              {"outputs", e.outputs}, {"warnings", e.warnings}};
    if (!e.ok) j["error"] = e.error;
    if (with_timings) {
      json t = json::object();
      for (const auto& [stage, ms] : e.timings_ms) t[stage] = ms;
      j["timings_ms"] = t;
    }
    arr.push_back(j);
  }
  return {{"pages", arr}, {"failures", failures()}};
}

std::string page_id(const fs::path& path) { return path.stem().string(); }

std::vector<std::string> write_page_outputs(const PageResult& r, const fs::path& dir) {
  fs::create_directories(dir);
  std::vector<std::string> files;
  auto text = [&](const std::string& name, const std::string& body) {
    write_text(dir / name, body);
    files.push_back(name);
  };
  text(r.id + ".detections.json", detections_to_json(r).dump(2) + "\n");
  text(r.id + ".score.json", score_to_json(r.semantics.score).dump(2) + "\n");
  if (r.lyrics_ran) text(r.id + ".lyrics.json", recognitions_to_json(r.id, r.lyrics).dump(2) + "\n");
  text(r.id + ".musicxml", r.musicxml);
  write_bytes(dir / (r.id + ".mid"), r.midi);
  files.push_back(r.id + ".mid");
  return files;
}

RunManifest run(const PipelineConfig& cfg, const std::vector<fs::path>& pages, const RunOptions& opts) {
  const Pipeline pipeline(cfg, opts.with_lyrics);
  return run(pipeline, pages, opts);
}

RunManifest run(const Pipeline& pipeline, const std::vector<fs::path>& pages, const RunOptions& opts) {
  if (pages.empty()) throw std::invalid_argument("run needs at least one page");
  RunManifest manifest;
  manifest.pages.resize(pages.size());
  std::mutex write_mutex;
  std::atomic<std::size_t> next{0};

  auto worker = [&] {
    for (std::size_t i = next++; i < pages.size(); i = next++) {
      ManifestEntry& e = manifest.pages[i];
      e.input = pages[i].string();
      e.page = page_id(pages[i]);
      try {
        const PageResult r = pipeline.process(load_image(pages[i]), e.page);
        e.angle = r.pre.angle;
        e.notes = r.semantics.score.event_count();
        e.lyric_chars = r.lyrics.size();
        e.timings_ms = r.timings_ms;
        e.warnings = r.warnings;
        {
          std::lock_guard lock(write_mutex);
          e.outputs = write_page_outputs(r, opts.out_dir);
        }
        e.ok = true;
        for (const auto& w : r.warnings) spdlog::warn("{}: {}", e.page, w);
      } catch (const std::exception& ex) {
        e.ok = false;
        e.error = ex.what();
        spdlog::error("{}: {}", e.page, ex.what());
      }
    }
  };

  const int jobs = std::clamp(pipeline.config().jobs, 1, static_cast<int>(pages.size()));
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  if (opts.write_manifest) {
    fs::create_directories(opts.out_dir);
    write_text(opts.out_dir / "manifest.json", manifest.to_json().dump(2) + "\n");
  }
  return manifest;
}

}  // namespace jianpu
