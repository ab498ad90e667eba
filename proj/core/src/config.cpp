#include "jianpu/config.hpp"

#include <cstdlib>
#include <fstream>

#include <fmt/format.h>

#ifndef JIANPU_DEFAULT_ASSET_DIR
#define JIANPU_DEFAULT_ASSET_DIR "assets"
#endif

namespace jianpu {

namespace fs = std::filesystem;
using nlohmann::json;

fs::path AssetPaths::resolved_root() const {
  if (!root.empty()) return root;
  if (const char* env = std::getenv("JIANPU_ASSET_DIR"); env && *env) return env;
  return JIANPU_DEFAULT_ASSET_DIR;
}

fs::path AssetPaths::templates_dir() const { return templates.empty() ? resolved_root() : templates; }
fs::path AssetPaths::charset_file() const {
  return charset.empty() ? resolved_root() / "charset" / "freq3500.txt" : charset;
}
fs::path AssetPaths::atlas_dir() const { return glyph_atlas.empty() ? resolved_root() / "glyphs" : glyph_atlas; }

namespace {

json metric(const RelationMetric& m) { return json::array({m.r_x, m.r_y}); }

RelationMetric metric_from(const json& j) { return {j.at(0).get<double>(), j.at(1).get<double>()}; }

bool same_kind(const json& a, const json& b) {
  if (a.is_number() && b.is_number()) return true;
  return a.type() == b.type();
}

// Every key in `user` must exist in `defaults` with a compatible type.
void check_keys(const json& user, const json& defaults, const std::string& path) {
  if (!user.is_object()) throw ConfigError(fmt::format("{}: expected an object", path.empty() ? "config" : path));
  for (const auto& [key, value] : user.items()) {
    const std::string here = path.empty() ? key : path + "." + key;
    const auto it = defaults.find(key);
    if (it == defaults.end()) throw ConfigError("unknown config key: " + here);
    if (it->is_object()) {
      check_keys(value, *it, here);
    } else if (!same_kind(value, *it)) {
      throw ConfigError(fmt::format("config key {}: expected {}, got {}", here, it->type_name(), value.type_name()));
    }
  }
}

template <typename T>
void need(bool ok, const char* what, T value) {
  if (!ok) throw ConfigError(fmt::format("invalid config value {} = {}", what, value));
}

}  // namespace

void PipelineConfig::validate() const {
  need(lighting.alpha > 0 && lighting.alpha < 1, "lighting.alpha", lighting.alpha);
  need(lighting.v_bgt > 0 && lighting.v_bgt < lighting.v_fgt && lighting.v_fgt < 1, "lighting.v_bgt/v_fgt",
       lighting.v_bgt);
  need(deskew.range_degrees > 0 && deskew.range_degrees <= 10, "deskew.range_deg", deskew.range_degrees);
  need(deskew.tol_degrees > 0, "deskew.tol_deg", deskew.tol_degrees);
  need(deskew.pyramid_levels >= 1, "deskew.levels", deskew.pyramid_levels);
  need(deskew.coarse_step_degrees > 0, "deskew.coarse_step_deg", deskew.coarse_step_degrees);
  need(log_sigma > 0, "digits.log_sigma", log_sigma);
  need(digits.threshold > 0 && digits.threshold < 1, "digits.threshold", digits.threshold);
  need(digits.nms_fraction > 0, "digits.nms_fraction", digits.nms_fraction);
  need(digits.stroke_threshold > 0 && digits.stroke_threshold < 1, "digits.stroke_threshold", digits.stroke_threshold);
  need(semantics.cutoff > 0, "semantics.cutoff", semantics.cutoff);
  for (const auto* m : {&semantics.octave, &semantics.augmentation, &semantics.underline, &semantics.dash,
                        &semantics.lyric, &semantics.tie}) {
    need(m->r_x > 0 && m->r_y > 0, "semantics metric radius", m->r_x);
  }
  need(semantics.beats_per_measure > Rational(0), "semantics.beats_per_measure", semantics.beats_per_measure.str());
  need(!lyrics.candidates.thresholds.empty(), "lyrics.thresholds", "[]");
  for (double t : lyrics.candidates.thresholds) need(t > 0 && t < 1, "lyrics.thresholds", t);
  need(lyrics.match.k1 >= 1, "lyrics.k1", lyrics.match.k1);
  need(lyrics.match.prior_r0 > 0, "lyrics.prior_r0", lyrics.match.prior_r0);
  need(lyrics.match.compare.lambda > 0, "lyrics.lambda", lyrics.match.compare.lambda);
  need(lyrics.match.compare.scale.lo < lyrics.match.compare.scale.hi && lyrics.match.compare.scale.lo >= 0.25 &&
           lyrics.match.compare.scale.hi <= 4.0,
       "lyrics.scale_range", lyrics.match.compare.scale.lo);
  need(lyric_em_ratio > 0, "lyrics.em_ratio", lyric_em_ratio);
  double wsum = 0.0;
  for (int k = 0; k < 4; ++k) {
    need(lyrics.match.compare.fusion.weights[k] >= 0, "fusion.weights", lyrics.match.compare.fusion.weights[k]);
    need(lyrics.match.compare.fusion.gammas[k] > 0, "fusion.gammas", lyrics.match.compare.fusion.gammas[k]);
    wsum += lyrics.match.compare.fusion.weights[k];
  }
  need(wsum > 0, "fusion.weights sum", wsum);
  need(export_opts.divisions >= 1 && export_opts.divisions <= 0x7fff, "export.divisions", export_opts.divisions);
  need(export_opts.tempo_bpm > 0, "export.tempo_bpm", export_opts.tempo_bpm);
  need(jobs >= 1, "run.jobs", jobs);
}

json config_to_json(const PipelineConfig& c) {
  const auto& lc = c.lyrics.candidates;
  const auto& lm = c.lyrics.match;
  return {
      {"assets",
       {{"root", c.assets.root.string()},
        {"templates", c.assets.templates.string()},
        {"charset", c.assets.charset.string()},
        {"glyph_atlas", c.assets.glyph_atlas.string()},
        {"embedding_table", c.assets.embedding_table.string()}}},
      {"lighting",
       {{"enabled", c.lighting_enabled},
        {"alpha", c.lighting.alpha},
        {"v_bgt", c.lighting.v_bgt},
        {"v_fgt", c.lighting.v_fgt}}},
      {"deskew",
       {{"enabled", c.deskew_enabled},
        {"range_deg", c.deskew.range_degrees},
        {"tol_deg", c.deskew.tol_degrees},
        {"levels", c.deskew.pyramid_levels},
        {"coarse_step_deg", c.deskew.coarse_step_degrees}}},
      {"digits",
       {{"log_sigma", c.log_sigma},
        {"threshold", c.digits.threshold},
        {"nms_fraction", c.digits.nms_fraction},
        {"overlap_iou", c.digits.overlap_iou},
        {"stroke_threshold", c.digits.stroke_threshold}}},
      {"structural",
       {{"binarize_threshold", c.structural.binarize_threshold},
        {"dot_area", {c.structural.dot_area_min, c.structural.dot_area_max}},
        {"dot_aspect", {c.structural.dot_aspect_min, c.structural.dot_aspect_max}},
        {"line_height_max", c.structural.line_height_max},
        {"line_width_min", c.structural.line_width_min},
        {"barline_height_min", c.structural.barline_height_min},
        {"band_below", c.structural.band_below},
        {"band_above", c.structural.band_above}}},
      {"ties",
       {{"binarize_threshold", c.ties.binarize_threshold},
        {"close_radius", c.ties.close_radius},
        {"open_radius", c.ties.open_radius},
        {"smooth_window", c.ties.smooth_window},
        {"min_span", c.ties.min_span},
        {"max_flatness", c.ties.max_flatness},
        {"min_sagitta_px", c.ties.min_sagitta_px},
        {"min_sagitta_ratio", c.ties.min_sagitta_ratio},
        {"max_sign_changes", c.ties.max_sign_changes}}},
      {"semantics",
       {{"octave", metric(c.semantics.octave)},
        {"augmentation", metric(c.semantics.augmentation)},
        {"underline", metric(c.semantics.underline)},
        {"dash", metric(c.semantics.dash)},
        {"lyric", metric(c.semantics.lyric)},
        {"tie", metric(c.semantics.tie)},
        {"cutoff", c.semantics.cutoff},
        {"key_root", c.semantics.key_root},
        {"base_octave", c.semantics.base_octave},
        {"beats_per_measure", c.semantics.beats_per_measure.str()}}},
      {"lyrics",
       {{"thresholds", lc.thresholds},
        {"em_ratio", c.lyric_em_ratio},
        {"merge_iou", lc.merge_iou},
        {"merge_center_em", lc.merge_center_em},
        {"max_merged_em", lc.max_merged_em},
        {"min_cell_em", lc.min_cell_em},
        {"aspect", {lc.aspect_min, lc.aspect_max}},
        {"size_em", {lc.size_min_em, lc.size_max_em}},
        {"density", {lc.density_min, lc.density_max}},
        {"charset_limit", c.charset_limit},
        {"k1", lm.k1},
        {"prior_r0", lm.prior_r0},
        {"use_prior", lm.use_prior},
        {"accept_threshold", c.lyrics.accept_threshold},
        {"lambda", lm.compare.lambda},
        {"scale_range", {lm.compare.scale.lo, lm.compare.scale.hi}},
        {"scale_tol", lm.compare.scale.tol},
        {"fast", c.fast}}},
      {"fusion", {{"weights", lm.compare.fusion.weights}, {"gammas", lm.compare.fusion.gammas}}},
      {"export",
       {{"divisions", c.export_opts.divisions},
        {"tempo_bpm", c.export_opts.tempo_bpm},
        {"part_name", c.export_opts.part_name},
        {"midi_lyrics", c.export_opts.midi_lyrics}}},
      {"run", {{"jobs", c.jobs}, {"seed", c.seed}}},
  };
}

PipelineConfig config_from_json(const json& doc) {
  const PipelineConfig defaults;
  json merged = config_to_json(defaults);
  check_keys(doc, merged, "");
  merged.merge_patch(doc);

  PipelineConfig c;
  try {
    const auto& a = merged["assets"];
    c.assets.root = a["root"].get<std::string>();
    c.assets.templates = a["templates"].get<std::string>();
    c.assets.charset = a["charset"].get<std::string>();
    c.assets.glyph_atlas = a["glyph_atlas"].get<std::string>();
    c.assets.embedding_table = a["embedding_table"].get<std::string>();

    const auto& l = merged["lighting"];
    c.lighting_enabled = l["enabled"].get<bool>();
    c.lighting = {l["alpha"].get<double>(), l["v_bgt"].get<double>(), l["v_fgt"].get<double>()};

    const auto& d = merged["deskew"];
    c.deskew_enabled = d["enabled"].get<bool>();
    c.deskew.range_degrees = d["range_deg"].get<double>();
    c.deskew.tol_degrees = d["tol_deg"].get<double>();
    c.deskew.pyramid_levels = d["levels"].get<int>();
    c.deskew.coarse_step_degrees = d["coarse_step_deg"].get<double>();

    const auto& g = merged["digits"];
    c.log_sigma = g["log_sigma"].get<double>();
    c.digits.threshold = g["threshold"].get<double>();
    c.digits.nms_fraction = g["nms_fraction"].get<double>();
    c.digits.overlap_iou = g["overlap_iou"].get<double>();
    c.digits.stroke_threshold = g["stroke_threshold"].get<double>();

    const auto& s = merged["structural"];
    c.structural.binarize_threshold = s["binarize_threshold"].get<double>();
    c.structural.dot_area_min = s["dot_area"].at(0).get<double>();
    c.structural.dot_area_max = s["dot_area"].at(1).get<double>();
    c.structural.dot_aspect_min = s["dot_aspect"].at(0).get<double>();
    c.structural.dot_aspect_max = s["dot_aspect"].at(1).get<double>();
    c.structural.line_height_max = s["line_height_max"].get<double>();
    c.structural.line_width_min = s["line_width_min"].get<double>();
    c.structural.barline_height_min = s["barline_height_min"].get<double>();
    c.structural.band_below = s["band_below"].get<double>();
    c.structural.band_above = s["band_above"].get<double>();

    const auto& t = merged["ties"];
    c.ties.binarize_threshold = t["binarize_threshold"].get<double>();
    c.ties.close_radius = t["close_radius"].get<int>();
    c.ties.open_radius = t["open_radius"].get<int>();
    c.ties.smooth_window = t["smooth_window"].get<int>();
    c.ties.min_span = t["min_span"].get<double>();
    c.ties.max_flatness = t["max_flatness"].get<double>();
    c.ties.min_sagitta_px = t["min_sagitta_px"].get<double>();
    c.ties.min_sagitta_ratio = t["min_sagitta_ratio"].get<double>();
    c.ties.max_sign_changes = t["max_sign_changes"].get<int>();

    const auto& m = merged["semantics"];
    c.semantics.octave = metric_from(m["octave"]);
    c.semantics.augmentation = metric_from(m["augmentation"]);
    c.semantics.underline = metric_from(m["underline"]);
    c.semantics.dash = metric_from(m["dash"]);
    c.semantics.lyric = metric_from(m["lyric"]);
    c.semantics.tie = metric_from(m["tie"]);
    c.semantics.cutoff = m["cutoff"].get<double>();
    c.semantics.key_root = m["key_root"].get<int>();
    c.semantics.base_octave = m["base_octave"].get<int>();
    c.semantics.beats_per_measure = Rational::parse(m["beats_per_measure"].get<std::string>());

    const auto& y = merged["lyrics"];
    auto& lc = c.lyrics.candidates;
    auto& lm = c.lyrics.match;
    lc.thresholds = y["thresholds"].get<std::vector<double>>();
    c.lyric_em_ratio = y["em_ratio"].get<double>();
    lc.merge_iou = y["merge_iou"].get<double>();
    lc.merge_center_em = y["merge_center_em"].get<double>();
    lc.max_merged_em = y["max_merged_em"].get<double>();
    lc.min_cell_em = y["min_cell_em"].get<double>();
    lc.aspect_min = y["aspect"].at(0).get<double>();
    lc.aspect_max = y["aspect"].at(1).get<double>();
    lc.size_min_em = y["size_em"].at(0).get<double>();
    lc.size_max_em = y["size_em"].at(1).get<double>();
    lc.density_min = y["density"].at(0).get<double>();
    lc.density_max = y["density"].at(1).get<double>();
    c.charset_limit = y["charset_limit"].get<std::size_t>();
    lm.k1 = y["k1"].get<int>();
    lm.prior_r0 = y["prior_r0"].get<double>();
    lm.use_prior = y["use_prior"].get<bool>();
    c.lyrics.accept_threshold = y["accept_threshold"].get<double>();
    lm.compare.lambda = y["lambda"].get<double>();
    lm.compare.scale.lo = y["scale_range"].at(0).get<double>();
    lm.compare.scale.hi = y["scale_range"].at(1).get<double>();
    lm.compare.scale.tol = y["scale_tol"].get<double>();
    c.fast = y["fast"].get<bool>();
    lm.compare.use_skeleton = !c.fast;

    const auto& f = merged["fusion"];
    lm.compare.fusion.weights = f["weights"].get<std::array<double, 4>>();
    lm.compare.fusion.gammas = f["gammas"].get<std::array<double, 4>>();

    const auto& e = merged["export"];
    c.export_opts.divisions = e["divisions"].get<int>();
    c.export_opts.tempo_bpm = e["tempo_bpm"].get<double>();
    c.export_opts.part_name = e["part_name"].get<std::string>();
    c.export_opts.midi_lyrics = e["midi_lyrics"].get<bool>();

    const auto& r = merged["run"];
    c.jobs = r["jobs"].get<int>();
    c.seed = r["seed"].get<unsigned>();
  } catch (const json::exception& ex) {
    throw ConfigError(std::string("malformed config: ") + ex.what());
  } catch (const std::invalid_argument& ex) {
    throw ConfigError(std::string("malformed config: ") + ex.what());
  }
  c.validate();
  return c;
}

PipelineConfig load_config(const fs::path& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot read config " + path.string());
  json doc;
  try {
    f >> doc;
  } catch (const json::exception& ex) {
    throw ConfigError(fmt::format("{}: {}", path.string(), ex.what()));
  }
  return config_from_json(doc);
}

PipelineConfig apply_overrides(const PipelineConfig& cfg, const std::vector<std::string>& overrides) {
  if (overrides.empty()) return cfg;
  json doc = config_to_json(cfg);
  json patch = json::object();
  for (const auto& o : overrides) {
    const auto eq = o.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError("override must look like key=value: " + o);
    const std::string key = o.substr(0, eq);
    const std::string text = o.substr(eq + 1);
    json value = json::parse(text, nullptr, false);
    if (value.is_discarded()) value = text;
    json* node = &patch;
    std::size_t start = 0;
    while (true) {
      const auto dot = key.find('.', start);
      const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
      if (part.empty()) throw ConfigError("malformed override key: " + key);
      if (dot == std::string::npos) {
        (*node)[part] = value;
        break;
      }
      node = &(*node)[part];
      start = dot + 1;
    }
  }
  check_keys(patch, doc, "");
  doc.merge_patch(patch);
  return config_from_json(doc);
}

}  // namespace jianpu
