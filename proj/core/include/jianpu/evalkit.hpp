#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "jianpu/lyricocr.hpp"
#include "jianpu/semantics.hpp"

namespace jianpu {

struct MatchOutcome {
  int tp = 0;
  int fn = 0;
  int fp = 0;
  std::vector<std::pair<int, int>> pairs;  // (prediction, truth)
};

/// Greedy one-to-one matching by ascending Euclidean distance, pairs
/// farther than max_dist left unmatched. Ties by (prediction, truth) index.
MatchOutcome match_detections(const std::vector<PointF>& pred, const std::vector<PointF>& truth, double max_dist);

/// 2tp / (2tp + fn + fp); 1.0 when every count is zero.
double f1(int tp, int fn, int fp);

struct Counts {
  int tp = 0;
  int fn = 0;
  int fp = 0;
  [[nodiscard]] double f1() const { return jianpu::f1(tp, fn, fp); }
};

/// A matched pair whose content differs moves from tp to fn+1 and fp+1.
Counts joint_counts(const MatchOutcome& outcome, const std::function<bool(int pred, int truth)>& content_equal);
double joint_f1(const MatchOutcome& outcome, const std::function<bool(int pred, int truth)>& content_equal);

struct Tally {
  int correct = 0;
  int wrong = 0;
  /// 1.0 for an empty tally.
  [[nodiscard]] double value() const {
    return correct + wrong == 0 ? 1.0 : static_cast<double>(correct) / (correct + wrong);
  }
};

double accuracy(int correct, int wrong);
Tally accuracy(const MatchOutcome& outcome, const std::function<bool(int pred, int truth)>& predicate);

/// Systems paired in order; measures compared sequentially inside each
/// pair. Denominator is the number of truth measures.
Tally measure_length_accuracy(const ScoreGraph& pred, const ScoreGraph& truth);

struct LyricTruth {
  std::string ch;
  BoundingBox box;
};

std::vector<LyricTruth> lyric_truth_from_json(const nlohmann::json& doc);

struct EvalReport {
  Counts detection;      // notes located
  Counts digit_joint;    // plus digit value
  Counts note_joint;     // plus pitch and duration
  Tally pitch;
  Tally duration;
  Tally measure_length;
  Counts lyric_detection;
  Counts lyric_joint;
  bool has_lyrics = false;

  EvalReport& operator+=(const EvalReport& o);
  [[nodiscard]] nlohmann::json to_json() const;
  [[nodiscard]] std::string to_table() const;
};

std::vector<NoteEvent> flatten_events(const ScoreGraph& score);

EvalReport evaluate_score(const ScoreGraph& pred, const ScoreGraph& truth, double digit_height);

/// Recognitions matched to truth characters by centre distance.
void evaluate_lyrics(EvalReport& report, const std::vector<Recognition>& pred, const std::vector<LyricTruth>& truth,
                     double max_dist);

}  // namespace jianpu
