#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "jianpu/config.hpp"

namespace scribe {

enum ExitCode { kOk = 0, kPartial = 1, kUsage = 2 };

struct Common {
  std::filesystem::path config_file;
  std::filesystem::path out_dir = "out";
  bool with_lyrics = false;
  int jobs = 0;  // 0 keeps the config value
  long long seed = -1;
  std::vector<std::string> overrides;
  bool verbose = false;

  [[nodiscard]] jianpu::PipelineConfig load() const;
};

/// Expands directories into their .png/.pgm files, sorted.
std::vector<std::filesystem::path> expand_inputs(const std::vector<std::string>& args);

int cmd_run(const Common& c, const std::vector<std::string>& inputs);
int cmd_preprocess(const Common& c, const std::vector<std::string>& inputs);
int cmd_detect(const Common& c, const std::vector<std::string>& inputs, bool preprocessed);
int cmd_recognize_lyrics(const Common& c, const std::vector<std::string>& inputs, bool preprocessed);
int cmd_export(const Common& c, const std::vector<std::string>& inputs);

struct EvaluateArgs {
  std::string pred;
  std::string truth;
  std::string counts;
  double digit_height = 0.0;  // 0: from the truth index, else 30
  double lyric_radius = 0.0;  // 0: half the digit height
};
int cmd_evaluate(const Common& c, const EvaluateArgs& a);

struct RenderArgs {
  int pages = 20;
  int systems = 6;
  double max_skew = 0.0;
  bool no_arcs = false;
  int patches = 0;  // labelled lyric crops written to <out>/patches
};
int cmd_render_fixtures(const Common& c, const RenderArgs& a);

struct CalibrateArgs {
  std::string patches;
  double weight_step = 0.1;
  std::vector<double> gammas{0.5, 1.0, 2.0};
};
int cmd_calibrate_fusion(const Common& c, const CalibrateArgs& a);

}  // namespace scribe
