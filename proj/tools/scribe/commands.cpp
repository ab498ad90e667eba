#include "commands.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstring>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <thread>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "jianpu/evalkit.hpp"
#include "jianpu/pipeline.hpp"
#include "jianpu/scorexport.hpp"
#include "jianpu/synth.hpp"

namespace scribe {

namespace fs = std::filesystem;
using nlohmann::json;

jianpu::PipelineConfig Common::load() const {
  jianpu::PipelineConfig cfg = config_file.empty() ? jianpu::PipelineConfig{} : jianpu::load_config(config_file);
  std::vector<std::string> sets = overrides;
  if (jobs > 0) sets.push_back(fmt::format("run.jobs={}", jobs));
  if (seed >= 0) sets.push_back(fmt::format("run.seed={}", seed));
  cfg = jianpu::apply_overrides(cfg, sets);
  cfg.validate();
  return cfg;
}

std::vector<fs::path> expand_inputs(const std::vector<std::string>& args) {
  std::vector<fs::path> out;
  for (const auto& a : args) {
    const fs::path p(a);
    if (fs::is_directory(p)) {
      std::vector<fs::path> found;
      for (const auto& e : fs::directory_iterator(p)) {
        const auto ext = e.path().extension().string();
        if (e.is_regular_file() && (ext == ".png" || ext == ".pgm")) found.push_back(e.path());
      }
      std::sort(found.begin(), found.end());
      out.insert(out.end(), found.begin(), found.end());
    } else if (fs::exists(p)) {
      out.push_back(p);
    } else {
      throw std::invalid_argument("no such input: " + a);
    }
  }
  if (out.empty()) throw std::invalid_argument("no input pages");
  return out;
}

namespace {

json read_json(const fs::path& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot read " + path.string());
  return json::parse(f);
}

void write_json(const fs::path& path, const json& j) { jianpu::write_text(path, j.dump(2) + "\n"); }

// Runs fn on every page over `jobs` workers; returns the failure count.
int for_each_page(const std::vector<fs::path>& pages, int jobs, const std::function<void(const fs::path&)>& fn) {
  std::atomic<std::size_t> next{0};
  std::atomic<int> failures{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < pages.size(); i = next++) {
      try {
        fn(pages[i]);
      } catch (const std::exception& e) {
        spdlog::error("{}: {}", pages[i].string(), e.what());
        ++failures;
      }
    }
  };
  const int n = std::clamp(jobs, 1, static_cast<int>(pages.size()));
  std::vector<std::thread> pool;
  for (int j = 1; j < n; ++j) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  return failures;
}

int exit_for(int failures) { return failures == 0 ? kOk : kPartial; }

jianpu::PreprocessOutcome load_stage_input(const fs::path& path, bool preprocessed, const jianpu::PipelineConfig& cfg) {
  const jianpu::GrayImage img = jianpu::load_image(path);
  if (!preprocessed) return jianpu::preprocess_page(img, cfg);
  jianpu::PreprocessOutcome pre;
  pre.image = img;
  const fs::path side = path.parent_path() / (jianpu::page_id(path) + ".preprocess.json");
  if (fs::exists(side)) pre.angle = read_json(side).value("angle", 0.0);
  return pre;
}

}  // namespace

int cmd_run(const Common& c, const std::vector<std::string>& inputs) {
  const auto cfg = c.load();
  const auto pages = expand_inputs(inputs);
  jianpu::RunOptions opts;
  opts.out_dir = c.out_dir;
  opts.with_lyrics = c.with_lyrics;
  const auto manifest = jianpu::run(cfg, pages, opts);
  spdlog::info("processed {} pages, {} failed", manifest.pages.size(), manifest.failures());
  return exit_for(manifest.failures());
}

int cmd_preprocess(const Common& c, const std::vector<std::string>& inputs) {
  const auto cfg = c.load();
  const auto pages = expand_inputs(inputs);
  fs::create_directories(c.out_dir);
  const int failed = for_each_page(pages, cfg.jobs, [&](const fs::path& p) {
    const auto pre = jianpu::preprocess_page(jianpu::load_image(p), cfg);
    const std::string id = jianpu::page_id(p);
    jianpu::save_png(pre.image, c.out_dir / (id + ".png"));
    json j = {{"page", id}, {"angle", pre.angle}};
    if (pre.lighting) {
      j["lighting"] = {{"v_bg", pre.lighting->v_bg},
                       {"v_fg", pre.lighting->v_fg},
                       {"gamma1", pre.lighting->gamma1},
                       {"gamma2", pre.lighting->gamma2}};
    }
    write_json(c.out_dir / (id + ".preprocess.json"), j);
  });
  return exit_for(failed);
}

int cmd_detect(const Common& c, const std::vector<std::string>& inputs, bool preprocessed) {
  const auto cfg = c.load();
  const auto pages = expand_inputs(inputs);
  const jianpu::Pipeline pipeline(cfg, c.with_lyrics);
  fs::create_directories(c.out_dir);
  const int failed = for_each_page(pages, cfg.jobs, [&](const fs::path& p) {
    const std::string id = jianpu::page_id(p);
    const auto r = pipeline.process_preprocessed(load_stage_input(p, preprocessed, cfg), id);
    write_json(c.out_dir / (id + ".detections.json"), jianpu::detections_to_json(r));
    write_json(c.out_dir / (id + ".score.json"), jianpu::score_to_json(r.semantics.score));
    for (const auto& w : r.warnings) spdlog::warn("{}: {}", id, w);
  });
  return exit_for(failed);
}

int cmd_recognize_lyrics(const Common& c, const std::vector<std::string>& inputs, bool preprocessed) {
  const auto cfg = c.load();
  const auto pages = expand_inputs(inputs);
  const jianpu::Pipeline pipeline(cfg, true);
  fs::create_directories(c.out_dir);
  const int failed = for_each_page(pages, cfg.jobs, [&](const fs::path& p) {
    const std::string id = jianpu::page_id(p);
    const auto r = pipeline.process_preprocessed(load_stage_input(p, preprocessed, cfg), id);
    write_json(c.out_dir / (id + ".lyrics.json"), jianpu::recognitions_to_json(id, r.lyrics));
  });
  return exit_for(failed);
}

int cmd_export(const Common& c, const std::vector<std::string>& inputs) {
  const auto cfg = c.load();
  fs::create_directories(c.out_dir);
  std::vector<fs::path> files(inputs.begin(), inputs.end());
  const int failed = for_each_page(files, cfg.jobs, [&](const fs::path& p) {
    const json doc = read_json(p);
    jianpu::ScoreGraph score;
    std::string id = p.stem().string();
    for (const char* suffix : {".score", ".detections", ".truth"}) {
      if (id.size() > std::strlen(suffix) && id.ends_with(suffix)) id.resize(id.size() - std::strlen(suffix));
    }
    if (doc.contains("detections")) {
      score = jianpu::score_from_detections(doc, cfg.semantics).score;
    } else {
      score = jianpu::score_from_json(doc);
    }
    jianpu::write_text(c.out_dir / (id + ".musicxml"), jianpu::to_musicxml(score, cfg.export_opts));
    jianpu::write_bytes(c.out_dir / (id + ".mid"), jianpu::to_midi(score, cfg.export_opts));
  });
  return exit_for(failed);
}

namespace {

int evaluate_counts(const fs::path& path) {
  const json doc = read_json(path);
  int mismatches = 0;
  std::cout << fmt::format("{:<28} {:>16} {:>8} {:>9}  {}\n", "fixture", "counts", "value", "expected", "status");
  // Values compare at the precision they are stated in: 3 decimals, or
  // 1 decimal for percentages.
  auto line = [&](const std::string& name, const std::string& counts, double value, const json& entry) {
    std::string shown = fmt::format("{:.3f}", value), expected = "-", status;
    std::optional<bool> ok;
    if (entry.contains("expected")) {
      const double e = entry.at("expected").get<double>();
      expected = fmt::format("{:.3f}", e);
      ok = std::lround(value * 1000.0) == std::lround(e * 1000.0);
    } else if (entry.contains("expected_percent")) {
      const double e = entry.at("expected_percent").get<double>();
      shown = fmt::format("{:.1f}%", 100.0 * value);
      expected = fmt::format("{:.1f}%", e);
      ok = std::lround(value * 1000.0) == std::lround(e * 10.0);
    }
    if (ok) {
      status = *ok ? "ok" : "MISMATCH";
      mismatches += *ok ? 0 : 1;
    }
    std::cout << fmt::format("{:<28} {:>16} {:>8} {:>9}  {}\n", name, counts, shown, expected, status);
  };
  for (const auto& e : doc.value("f1", json::array())) {
    const int tp = e.at("tp"), fn = e.at("fn"), fp = e.at("fp");
    line(e.at("name").get<std::string>(), fmt::format("{}/{}/{}", tp, fn, fp), jianpu::f1(tp, fn, fp), e);
  }
  for (const auto& e : doc.value("accuracy", json::array())) {
    const int t = e.at("correct"), f = e.at("wrong");
    line(e.at("name").get<std::string>(), fmt::format("{}/{}", t, f), jianpu::accuracy(t, f), e);
  }
  return mismatches == 0 ? kOk : kPartial;
}

std::string strip_suffix(const std::string& name, const std::string& suffix) {
  return name.ends_with(suffix) ? name.substr(0, name.size() - suffix.size()) : std::string();
}

}  // namespace

int cmd_evaluate(const Common& c, const EvaluateArgs& a) {
  if (!a.counts.empty()) return evaluate_counts(a.counts);
  if (a.pred.empty() || a.truth.empty()) throw std::invalid_argument("evaluate needs --pred and --truth, or --counts");

  struct Pair {
    std::string id;
    fs::path pred, truth, pred_lyrics, truth_lyrics;
    double digit_height = 30.0;
  };
  std::vector<Pair> pairs;
  if (fs::is_directory(a.truth)) {
    std::map<std::string, double> heights;
    if (fs::exists(fs::path(a.truth) / "index.json")) {
      for (const auto& e : read_json(fs::path(a.truth) / "index.json").at("pages")) {
        heights[e.at("id").get<std::string>()] = e.value("digit_height", 30.0);
      }
    }
    std::vector<fs::path> truths;
    for (const auto& e : fs::directory_iterator(a.truth)) {
      if (!strip_suffix(e.path().filename().string(), ".truth.json").empty()) truths.push_back(e.path());
    }
    std::sort(truths.begin(), truths.end());
    for (const auto& t : truths) {
      Pair p;
      p.id = strip_suffix(t.filename().string(), ".truth.json");
      p.truth = t;
      p.pred = fs::path(a.pred) / (p.id + ".score.json");
      p.truth_lyrics = fs::path(a.truth) / (p.id + ".lyrics.json");
      p.pred_lyrics = fs::path(a.pred) / (p.id + ".lyrics.json");
      if (heights.count(p.id)) p.digit_height = heights[p.id];
      pairs.push_back(p);
    }
  } else {
    pairs.push_back({fs::path(a.truth).stem().string(), a.pred, a.truth, {}, {}, 30.0});
  }
  if (pairs.empty()) throw std::invalid_argument("no truth files found in " + a.truth);

  jianpu::EvalReport total;
  json per_page = json::array();
  int missing = 0;
  for (auto& p : pairs) {
    if (a.digit_height > 0) p.digit_height = a.digit_height;
    const auto truth = jianpu::score_from_json(read_json(p.truth));
    jianpu::ScoreGraph pred;
    if (fs::exists(p.pred)) {
      pred = jianpu::score_from_json(read_json(p.pred));
    } else {
      spdlog::warn("{}: no prediction, scored as empty", p.id);
      ++missing;
    }
    auto report = jianpu::evaluate_score(pred, truth, p.digit_height);
    if (!p.truth_lyrics.empty() && fs::exists(p.truth_lyrics)) {
      const auto truth_chars = jianpu::lyric_truth_from_json(read_json(p.truth_lyrics));
      std::vector<jianpu::Recognition> recs;
      if (fs::exists(p.pred_lyrics)) recs = jianpu::recognitions_from_json(read_json(p.pred_lyrics));
      const double radius = a.lyric_radius > 0 ? a.lyric_radius : 0.5 * p.digit_height;
      jianpu::evaluate_lyrics(report, recs, truth_chars, radius);
    }
    per_page.push_back({{"page", p.id}, {"report", report.to_json()}});
    total += report;
  }
  std::cout << total.to_table();
  fs::create_directories(c.out_dir);
  write_json(c.out_dir / "report.json", {{"total", total.to_json()}, {"pages", per_page}});
  return missing == 0 ? kOk : kPartial;
}

int cmd_render_fixtures(const Common& c, const RenderArgs& a) {
  const auto cfg = c.load();
  const auto assets = jianpu::load_synth_assets(cfg.assets, cfg.charset_limit);
  jianpu::SynthOptions opts;
  opts.systems = a.systems;
  opts.lyrics = c.with_lyrics;
  opts.max_skew_degrees = a.max_skew;
  opts.arcs = !a.no_arcs;
  opts.key_root = cfg.semantics.key_root;
  opts.base_octave = cfg.semantics.base_octave;
  const auto pages = jianpu::render_corpus(assets, opts, a.pages, cfg.seed);
  jianpu::write_corpus(pages, c.out_dir);
  std::size_t notes = 0;
  for (const auto& p : pages) notes += p.truth.event_count();
  spdlog::info("rendered {} pages, {} notes into {}", pages.size(), notes, c.out_dir.string());

  if (a.patches > 0) {
    if (!c.with_lyrics) throw std::invalid_argument("--patches needs --with-lyrics");
    const fs::path dir = c.out_dir / "patches";
    fs::create_directories(dir);
    int written = 0;
    for (const auto& p : pages) {
      for (std::size_t i = 0; i < p.lyrics.size() && written < a.patches; ++i) {
        const auto& t = p.lyrics[i];
        const auto hex = jianpu::codepoint_hex(t.ch);
        if (!hex) continue;
        const int side = static_cast<int>(std::max(t.box.width(), t.box.height()) * 1.2) + 4;
        const int cx = static_cast<int>(t.box.center_x()), cy = static_cast<int>(t.box.center_y());
        jianpu::BoundingBox cell{std::max(0, cx - side / 2), std::max(0, cy - side / 2),
                                 std::min(p.image.width(), cx + side / 2), std::min(p.image.height(), cy + side / 2)};
        jianpu::save_png(jianpu::crop(p.image, cell), dir / fmt::format("{}_{}_{}.png", *hex, p.id, i));
        ++written;
      }
    }
    spdlog::info("wrote {} labelled patches", written);
  }
  return kOk;
}

int cmd_calibrate_fusion(const Common& c, const CalibrateArgs& a) {
  const auto cfg = c.load();
  std::vector<jianpu::CalibrationSample> samples;
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(a.patches)) {
    if (e.path().extension() == ".png") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  for (const auto& f : files) {
    const std::string stem = f.stem().string();
    const auto label = jianpu::utf8_from_hex(stem.substr(0, stem.find('_')));
    if (!label) {
      spdlog::warn("skipping {}: no codepoint prefix", f.string());
      continue;
    }
    samples.push_back({jianpu::load_image(f), *label});
  }
  const auto charset = jianpu::load_charset(cfg.assets.charset_file(), cfg.charset_limit);
  const auto table =
      jianpu::build_template_table(charset, jianpu::atlas_glyph_source(cfg.assets.atlas_dir()));
  auto match = cfg.lyrics.match;
  match.compare.use_skeleton = !cfg.fast;
  const auto res = jianpu::calibrate_fusion(samples, table, match, a.weight_step, a.gammas);
  const json out = {{"samples", res.samples},
                    {"baseline_accuracy", res.baseline_accuracy},
                    {"accuracy", res.accuracy},
                    {"fusion", {{"weights", res.params.weights}, {"gammas", res.params.gammas}}}};
  std::cout << out.dump(2) << "\n";
  fs::create_directories(c.out_dir);
  write_json(c.out_dir / "fusion.json", out);
  return kOk;
}

}  // namespace scribe
