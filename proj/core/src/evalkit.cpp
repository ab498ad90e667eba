#include "jianpu/evalkit.hpp"

#include <algorithm>
#include <cmath>
#include <tuple>

#include <fmt/format.h>

namespace jianpu {

MatchOutcome match_detections(const std::vector<PointF>& pred, const std::vector<PointF>& truth, double max_dist) {
  struct Cand {
    double d;
    int p;
    int t;
  };
  std::vector<Cand> cands;
  for (int i = 0; i < static_cast<int>(pred.size()); ++i) {
    for (int j = 0; j < static_cast<int>(truth.size()); ++j) {
      const double d = std::hypot(pred[i].x - truth[j].x, pred[i].y - truth[j].y);
      if (d <= max_dist) cands.push_back({d, i, j});
    }
  }
  std::sort(cands.begin(), cands.end(),
            [](const Cand& a, const Cand& b) { return std::tie(a.d, a.p, a.t) < std::tie(b.d, b.p, b.t); });
  std::vector<bool> pu(pred.size(), false), tu(truth.size(), false);
  MatchOutcome out;
  for (const auto& c : cands) {
    if (pu[c.p] || tu[c.t]) continue;
    pu[c.p] = tu[c.t] = true;
    out.pairs.emplace_back(c.p, c.t);
  }
  std::sort(out.pairs.begin(), out.pairs.end(), [](const auto& a, const auto& b) { return a.second < b.second; });
  out.tp = static_cast<int>(out.pairs.size());
  out.fn = static_cast<int>(truth.size()) - out.tp;
  out.fp = static_cast<int>(pred.size()) - out.tp;
  return out;
}

double f1(int tp, int fn, int fp) {
  if (tp < 0 || fn < 0 || fp < 0) throw std::invalid_argument("negative count");
  const int den = 2 * tp + fn + fp;
  return den == 0 ? 1.0 : 2.0 * tp / den;
}

Counts joint_counts(const MatchOutcome& outcome, const std::function<bool(int, int)>& content_equal) {
  Counts c{outcome.tp, outcome.fn, outcome.fp};
  for (const auto& [p, t] : outcome.pairs) {
    if (!content_equal(p, t)) {
      --c.tp;
      ++c.fn;
      ++c.fp;
    }
  }
  return c;
}

double joint_f1(const MatchOutcome& outcome, const std::function<bool(int, int)>& content_equal) {
  return joint_counts(outcome, content_equal).f1();
}

double accuracy(int correct, int wrong) { return Tally{correct, wrong}.value(); }

Tally accuracy(const MatchOutcome& outcome, const std::function<bool(int, int)>& predicate) {
  Tally t;
  for (const auto& [p, q] : outcome.pairs) (predicate(p, q) ? t.correct : t.wrong)++;
  return t;
}

Tally measure_length_accuracy(const ScoreGraph& pred, const ScoreGraph& truth) {
  Tally t;
  for (std::size_t s = 0; s < truth.systems.size(); ++s) {
    const auto& tm = truth.systems[s].measures;
    for (std::size_t m = 0; m < tm.size(); ++m) {
      const bool ok = s < pred.systems.size() && m < pred.systems[s].measures.size() &&
                      pred.systems[s].measures[m].length == tm[m].length;
      (ok ? t.correct : t.wrong)++;
    }
  }
  return t;
}

std::vector<LyricTruth> lyric_truth_from_json(const nlohmann::json& doc) {
  std::vector<LyricTruth> out;
  for (const auto& j : doc.at("chars")) {
    const auto& b = j.at("box");
    out.push_back({j.at("ch").get<std::string>(),
                   {b.at(0).get<int>(), b.at(1).get<int>(), b.at(2).get<int>(), b.at(3).get<int>()}});
  }
  return out;
}

namespace {

void add(Counts& a, const Counts& b) {
  a.tp += b.tp;
  a.fn += b.fn;
  a.fp += b.fp;
}

void add(Tally& a, const Tally& b) {
  a.correct += b.correct;
  a.wrong += b.wrong;
}

nlohmann::json counts_json(const Counts& c) {
  return {{"f1", c.f1()}, {"tp", c.tp}, {"fn", c.fn}, {"fp", c.fp}};
}

nlohmann::json tally_json(const Tally& t) {
  return {{"value", t.value()}, {"correct", t.correct}, {"wrong", t.wrong}};
}

}  // namespace

EvalReport& EvalReport::operator+=(const EvalReport& o) {
  add(detection, o.detection);
  add(digit_joint, o.digit_joint);
  add(note_joint, o.note_joint);
  add(pitch, o.pitch);
  add(duration, o.duration);
  add(measure_length, o.measure_length);
  add(lyric_detection, o.lyric_detection);
  add(lyric_joint, o.lyric_joint);
  has_lyrics = has_lyrics || o.has_lyrics;
  return *this;
}

nlohmann::json EvalReport::to_json() const {
  nlohmann::json j = {{"detection", counts_json(detection)},
                      {"digit_joint", counts_json(digit_joint)},
                      {"note_joint", counts_json(note_joint)},
                      {"pitch_accuracy", tally_json(pitch)},
                      {"duration_accuracy", tally_json(duration)},
                      {"measure_length_accuracy", tally_json(measure_length)}};
  if (has_lyrics) {
    j["lyric_detection"] = counts_json(lyric_detection);
    j["lyric_joint"] = counts_json(lyric_joint);
  }
  return j;
}

std::string EvalReport::to_table() const {
  std::string out = fmt::format("{:<26} {:>8}  {}\n", "metric", "value", "counts");
  auto row_c = [&](const char* name, const Counts& c) {
    out += fmt::format("{:<26} {:>8.3f}  ({}/{}/{})\n", name, c.f1(), c.tp, c.fn, c.fp);
  };
  auto row_t = [&](const char* name, const Tally& t) {
    out += fmt::format("{:<26} {:>7.1f}%  ({}/{})\n", name, 100.0 * t.value(), t.correct, t.wrong);
  };
  row_c("detection F1", detection);
  row_c("digit joint F1", digit_joint);
  row_c("note joint F1", note_joint);
  row_t("pitch accuracy", pitch);
  row_t("duration accuracy", duration);
  row_t("measure length accuracy", measure_length);
  if (has_lyrics) {
    row_c("lyric detection F1", lyric_detection);
    row_c("lyric joint F1", lyric_joint);
  }
  return out;
}

std::vector<NoteEvent> flatten_events(const ScoreGraph& score) {
  std::vector<NoteEvent> out;
  for (const auto& s : score.systems) {
    for (const auto& m : s.measures) out.insert(out.end(), m.events.begin(), m.events.end());
  }
  return out;
}

EvalReport evaluate_score(const ScoreGraph& pred, const ScoreGraph& truth, double digit_height) {
  const auto pe = flatten_events(pred);
  const auto te = flatten_events(truth);
  std::vector<PointF> pp, tp;
  for (const auto& e : pe) pp.push_back(e.position);
  for (const auto& e : te) tp.push_back(e.position);
  const MatchOutcome m = match_detections(pp, tp, 0.75 * digit_height);

  EvalReport r;
  r.detection = {m.tp, m.fn, m.fp};
  r.digit_joint = joint_counts(m, [&](int p, int t) { return pe[p].digit == te[t].digit; });
  r.note_joint = joint_counts(m, [&](int p, int t) {
    return pe[p].digit == te[t].digit && pe[p].pitch == te[t].pitch && pe[p].duration == te[t].duration;
  });
  r.pitch = accuracy(m, [&](int p, int t) { return pe[p].pitch == te[t].pitch; });
  r.duration = accuracy(m, [&](int p, int t) { return pe[p].duration == te[t].duration; });
  r.measure_length = measure_length_accuracy(pred, truth);
  return r;
}

void evaluate_lyrics(EvalReport& report, const std::vector<Recognition>& pred, const std::vector<LyricTruth>& truth,
                     double max_dist) {
  std::vector<PointF> pp, tp;
  for (const auto& r : pred) pp.push_back({r.box.center_x(), r.box.center_y()});
  for (const auto& t : truth) tp.push_back({t.box.center_x(), t.box.center_y()});
  const MatchOutcome m = match_detections(pp, tp, max_dist);
  report.has_lyrics = true;
  add(report.lyric_detection, Counts{m.tp, m.fn, m.fp});
  add(report.lyric_joint, joint_counts(m, [&](int p, int t) { return pred[p].character == truth[t].ch; }));
}

}  // namespace jianpu
