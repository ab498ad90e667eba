#include <iostream>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

#include "commands.hpp"

namespace {

void add_common(CLI::App* app, scribe::Common& c) {
  app->add_option("--config", c.config_file, "JSON config file")->check(CLI::ExistingFile);
  app->add_option("--out", c.out_dir, "Output directory");
  app->add_flag("--with-lyrics", c.with_lyrics, "Run the lyric OCR stage");
  app->add_option("--jobs", c.jobs, "Worker threads")->check(CLI::PositiveNumber);
  app->add_option("--seed", c.seed, "Seed for rendering and sampling")->check(CLI::NonNegativeNumber);
  app->add_option("--set", c.overrides, "Config override key=value (repeatable)");
  app->add_flag("-v,--verbose", c.verbose, "Debug logging");
}

}  // namespace

int main(int argc, char** argv) {
  auto logger = spdlog::stderr_logger_mt("jianpu");
  logger->set_pattern("%Y-%m-%dT%H:%M:%S.%e %l %v");
  spdlog::set_default_logger(logger);

  CLI::App app{"jianpu-scribe: numbered-notation OMR"};
  app.require_subcommand(1);
  scribe::Common common;
  std::vector<std::string> inputs;
  bool preprocessed = false;
  scribe::EvaluateArgs eval;
  scribe::RenderArgs render;
  scribe::CalibrateArgs calib;

  auto* run = app.add_subcommand("run", "Full pipeline: pages -> MusicXML, MIDI, score JSON");
  add_common(run, common);
  run->add_option("inputs", inputs, "Page images or directories")->required();

  auto* pre = app.add_subcommand("preprocess", "Lighting correction and deskew");
  add_common(pre, common);
  pre->add_option("inputs", inputs, "Page images or directories")->required();

  auto* det = app.add_subcommand("detect", "Symbol detection -> detections JSON and score JSON");
  add_common(det, common);
  det->add_option("inputs", inputs, "Page images or directories")->required();
  det->add_flag("--preprocessed", preprocessed, "Inputs already went through `preprocess`");

  auto* lyr = app.add_subcommand("recognize-lyrics", "Lyric OCR -> recognitions JSON");
  add_common(lyr, common);
  lyr->add_option("inputs", inputs, "Page images or directories")->required();
  lyr->add_flag("--preprocessed", preprocessed, "Inputs already went through `preprocess`");

  auto* exp = app.add_subcommand("export", "Score or detections JSON -> MusicXML and MIDI");
  add_common(exp, common);
  exp->add_option("inputs", inputs, "Score JSON or detections JSON files")->required()->check(CLI::ExistingFile);

  auto* ev = app.add_subcommand("evaluate", "Predictions vs ground truth, or count fixtures");
  add_common(ev, common);
  ev->add_option("--pred", eval.pred, "Prediction directory or score JSON");
  ev->add_option("--truth", eval.truth, "Truth directory or score JSON");
  ev->add_option("--counts", eval.counts, "Count fixture JSON")->check(CLI::ExistingFile);
  ev->add_option("--digit-height", eval.digit_height, "Digit height for the matching radius");
  ev->add_option("--lyric-radius", eval.lyric_radius, "Lyric matching radius in px");

  auto* rf = app.add_subcommand("render-fixtures", "Render the seeded synthetic corpus");
  add_common(rf, common);
  rf->add_option("--pages", render.pages, "Page count")->check(CLI::PositiveNumber);
  rf->add_option("--systems", render.systems, "Systems per page")->check(CLI::PositiveNumber);
  rf->add_option("--max-skew", render.max_skew, "Maximum skew in degrees")->check(CLI::Range(0.0, 5.0));
  rf->add_flag("--no-arcs", render.no_arcs, "Leave out ties and slurs");
  rf->add_option("--patches", render.patches, "Also write this many labelled lyric crops")
      ->check(CLI::NonNegativeNumber);

  auto* cal = app.add_subcommand("calibrate-fusion", "Grid-search fusion weights and gammas");
  add_common(cal, common);
  cal->add_option("--patches", calib.patches, "Directory of <hex codepoint>_*.png crops")
      ->required()
      ->check(CLI::ExistingDirectory);
  cal->add_option("--weight-step", calib.weight_step, "Simplex grid step")->check(CLI::Range(0.01, 1.0));
  cal->add_option("--gammas", calib.gammas, "Gamma grid");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? scribe::kOk : scribe::kUsage;
  }
  if (common.verbose) spdlog::set_level(spdlog::level::debug);

  try {
    if (*run) return scribe::cmd_run(common, inputs);
    if (*pre) return scribe::cmd_preprocess(common, inputs);
    if (*det) return scribe::cmd_detect(common, inputs, preprocessed);
    if (*lyr) return scribe::cmd_recognize_lyrics(common, inputs, preprocessed);
    if (*exp) return scribe::cmd_export(common, inputs);
    if (*ev) return scribe::cmd_evaluate(common, eval);
    if (*rf) return scribe::cmd_render_fixtures(common, render);
    if (*cal) return scribe::cmd_calibrate_fusion(common, calib);
  } catch (const jianpu::ConfigError& e) {
    spdlog::error("config: {}", e.what());
    return scribe::kUsage;
  } catch (const std::invalid_argument& e) {
    spdlog::error("{}", e.what());
    return scribe::kUsage;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return scribe::kPartial;
  }
  return scribe::kUsage;
}
