#include "jianpu/lyricocr.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <tuple>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "jianpu/morphoskel.hpp"

namespace jianpu {

namespace {

std::optional<char32_t> decode_utf8(const std::string& s) {
  if (s.empty()) return std::nullopt;
  const auto b0 = static_cast<unsigned char>(s[0]);
  int len = b0 < 0x80 ? 1 : (b0 >> 5) == 0x6 ? 2 : (b0 >> 4) == 0xe ? 3 : (b0 >> 3) == 0x1e ? 4 : 0;
  if (len == 0 || static_cast<int>(s.size()) != len) return std::nullopt;
  char32_t cp = len == 1 ? b0 : b0 & (0x7f >> len);
  for (int i = 1; i < len; ++i) {
    const auto b = static_cast<unsigned char>(s[i]);
    if ((b & 0xc0) != 0x80) return std::nullopt;
    cp = (cp << 6) | (b & 0x3f);
  }
  return cp;
}

GrayImage half_resolution(const GrayImage& img) {
  const int h = std::max(1, img.height() / 2), w = std::max(1, img.width() / 2);
  FloatRaster out(h, w);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      float s = 0.0f;
      for (int dy = 0; dy < 2; ++dy) {
        for (int dx = 0; dx < 2; ++dx) s += img.at(std::min(2 * y + dy, img.height() - 1), std::min(2 * x + dx, img.width() - 1));
      }
      out(y, x) = s / 4.0f;
    }
  }
  return GrayImage(std::move(out));
}

struct UnionFind {
  std::vector<int> parent;
  explicit UnionFind(int n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  int find(int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
};

double center_distance(const BoundingBox& a, const BoundingBox& b) {
  return std::hypot(a.center_x() - b.center_x(), a.center_y() - b.center_y());
}

}  // namespace

std::vector<CharCandidate> extract_candidates(const GrayImage& page, const CandidateOptions& opts) {
  const double em = opts.em_px;
  std::vector<BoundingBox> boxes;
  for (double t : opts.thresholds) {
    for (const auto& c : connected_components(binarize(page, t), 8)) {
      if (c.area >= opts.min_component_area && c.box.width() <= opts.max_merged_em * em &&
          c.box.height() <= opts.max_merged_em * em) {
        boxes.push_back(c.box);
      }
    }
  }
  const int n = static_cast<int>(boxes.size());

  // Interval-sorted sweep over x0 yields the candidate merge pairs.
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    return std::tie(boxes[a].x0, boxes[a].y0, a) < std::tie(boxes[b].x0, boxes[b].y0, b);
  });
  const double reach = opts.merge_center_em * em;
  struct Pair {
    double d;
    int a;
    int b;
  };
  std::vector<Pair> pairs;
  for (int oi = 0; oi < n; ++oi) {
    const BoundingBox& a = boxes[order[oi]];
    for (int oj = oi + 1; oj < n; ++oj) {
      const BoundingBox& b = boxes[order[oj]];
      if (b.x0 > a.x1 + reach + em) break;
      const double d = center_distance(a, b);
      if (box_iou(a, b) > opts.merge_iou || d <= reach) {
        pairs.push_back({d, std::min(order[oi], order[oj]), std::max(order[oi], order[oj])});
      }
    }
  }
  std::sort(pairs.begin(), pairs.end(), [](const Pair& p, const Pair& q) {
    return std::tie(p.d, p.a, p.b) < std::tie(q.d, q.a, q.b);
  });
  UnionFind uf(n);
  std::vector<BoundingBox> cluster_box = boxes;
  std::vector<int> cluster_size(n, 1);
  for (const auto& p : pairs) {
    const int ra = uf.find(p.a), rb = uf.find(p.b);
    if (ra == rb) continue;
    const BoundingBox u = united(cluster_box[ra], cluster_box[rb]);
    if (u.width() > opts.max_merged_em * em || u.height() > opts.max_merged_em * em) continue;
    uf.parent[rb] = ra;
    cluster_box[ra] = u;
    cluster_size[ra] += cluster_size[rb];
  }

  std::vector<CharCandidate> out;
  const BinaryImage ink = binarize(page, 0.5);
  for (int i = 0; i < n; ++i) {
    if (uf.find(i) != i) continue;
    const BoundingBox& b = cluster_box[i];
    const double side = std::max(b.width(), b.height());
    if (side < opts.size_min_em * em || side > opts.size_max_em * em) continue;
    const int min_cell = static_cast<int>(std::lround(opts.min_cell_em * em));
    const int cw = std::max(b.width(), min_cell), ch = std::max(b.height(), min_cell);
    const int cx0 = b.x0 - (cw - b.width()) / 2, cy0 = b.y0 - (ch - b.height()) / 2;
    const BoundingBox cell{std::max(0, cx0), std::max(0, cy0), std::min(page.width(), cx0 + cw),
                           std::min(page.height(), cy0 + ch)};
    const double aspect = static_cast<double>(cell.width()) / cell.height();
    if (aspect < opts.aspect_min || aspect > opts.aspect_max) continue;
    long long on = 0;
    for (int y = cell.y0; y < cell.y1; ++y) {
      for (int x = cell.x0; x < cell.x1; ++x) on += ink.at(y, x);
    }
    const double density = static_cast<double>(on) / static_cast<double>(cell.area());
    if (density < opts.density_min || density > opts.density_max) continue;
    out.push_back({b, cell, crop(page, cell), cluster_size[i]});
  }
  std::sort(out.begin(), out.end(), [](const CharCandidate& a, const CharCandidate& b) {
    return std::tie(a.box.y0, a.box.x0) < std::tie(b.box.y0, b.box.x0);
  });
  return out;
}

GrayImage normalize_patch(const GrayImage& patch, int canvas, int fit, float ink_threshold) {
  FloatRaster out(canvas, canvas, 0.0f);
  const BoundingBox ink = ink_bounds(patch, ink_threshold);
  if (!ink.valid()) return GrayImage(std::move(out));
  const GrayImage tight = crop(patch, ink);
  const double s = static_cast<double>(fit) / std::max(ink.width(), ink.height());
  const int h = std::clamp(static_cast<int>(std::lround(ink.height() * s)), 1, canvas);
  const int w = std::clamp(static_cast<int>(std::lround(ink.width() * s)), 1, canvas);
  const GrayImage scaled = resize_to(tight, h, w);
  const int oy = (canvas - h) / 2, ox = (canvas - w) / 2;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) out(oy + y, ox + x) = scaled.at(y, x);
  }
  return GrayImage(std::move(out));
}

std::vector<std::string> load_charset(const std::filesystem::path& path, std::size_t limit) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot read charset " + path.string());
  std::vector<std::string> out;
  std::string line;
  while (std::getline(f, line)) {
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
    if (line.empty()) continue;
    out.push_back(line);
    if (limit && out.size() >= limit) break;
  }
  return out;
}

std::optional<std::string> codepoint_hex(const std::string& ch) {
  const auto cp = decode_utf8(ch);
  if (!cp) return std::nullopt;
  return fmt::format("{:04x}", static_cast<std::uint32_t>(*cp));
}

std::optional<std::string> utf8_from_hex(const std::string& hex) {
  if (hex.empty() || hex.size() > 6) return std::nullopt;
  std::uint32_t cp = 0;
  for (char c : hex) {
    const int v = std::isdigit(static_cast<unsigned char>(c)) ? c - '0'
                  : (c >= 'a' && c <= 'f')                    ? c - 'a' + 10
                  : (c >= 'A' && c <= 'F')                    ? c - 'A' + 10
                                                               : -1;
    if (v < 0) return std::nullopt;
    cp = cp * 16 + static_cast<std::uint32_t>(v);
  }
  if (cp > 0x10ffff || (cp >= 0xd800 && cp <= 0xdfff)) return std::nullopt;
  std::string out;
  if (cp < 0x80) {
    out += static_cast<char>(cp);
  } else if (cp < 0x800) {
    out += static_cast<char>(0xc0 | (cp >> 6));
    out += static_cast<char>(0x80 | (cp & 0x3f));
  } else if (cp < 0x10000) {
    out += static_cast<char>(0xe0 | (cp >> 12));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3f));
    out += static_cast<char>(0x80 | (cp & 0x3f));
  } else {
    out += static_cast<char>(0xf0 | (cp >> 18));
    out += static_cast<char>(0x80 | ((cp >> 12) & 0x3f));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3f));
    out += static_cast<char>(0x80 | (cp & 0x3f));
  }
  return out;
}

GlyphSource atlas_glyph_source(const std::filesystem::path& atlas_dir) {
  return [atlas_dir](const std::string& ch) -> std::optional<GrayImage> {
    const auto hex = codepoint_hex(ch);
    if (!hex) return std::nullopt;
    const auto path = atlas_dir / (*hex + ".png");
    if (!std::filesystem::exists(path)) return std::nullopt;
    return load_image(path);
  };
}

PreparedCandidate prepare_candidate(const GrayImage& patch, int canvas) {
  PreparedCandidate c;
  c.patch = normalize_patch(patch, canvas, canvas * 5 / 6);
  c.half = half_resolution(c.patch);
  c.skeleton = skeleton_points(c.patch);
  return c;
}

HanziTemplateTable build_template_table(const std::vector<std::string>& charset, const GlyphSource& glyphs,
                                        const std::string& font_name, int font_size) {
  HanziTemplateTable table;
  table.font_name = font_name;
  table.font_size = font_size;
  std::set<std::string> seen;
  int rank = 0;
  for (const auto& ch : charset) {
    if (!seen.insert(ch).second) throw std::invalid_argument("duplicate character in charset: " + ch);
    const int r = rank++;
    const auto glyph = glyphs(ch);
    if (!glyph) {
      spdlog::warn("template table: no glyph for '{}', skipped", ch);
      continue;
    }
    PreparedCandidate p = prepare_candidate(*glyph, table.canvas);
    if (p.skeleton.size() < 3) {
      spdlog::warn("template table: degenerate skeleton for '{}', skipped", ch);
      continue;
    }
    table.entries.push_back({ch, std::move(p.patch), std::move(p.skeleton), std::move(p.half), r});
  }
  return table;
}

std::vector<int> prune_templates(const PreparedCandidate& cand, const HanziTemplateTable& table,
                                 const MatchOptions& opts) {
  std::vector<std::pair<double, int>> scored;
  scored.reserve(table.entries.size());
  for (int i = 0; i < static_cast<int>(table.entries.size()); ++i) {
    const auto& e = table.entries[i];
    double s = minmax_iou(cand.half, e.half);
    if (opts.use_prior) s *= 1.0 / (1.0 + e.rank / opts.prior_r0);
    scored.emplace_back(s, i);
  }
  const std::size_t k = std::min<std::size_t>(std::max(opts.k1, 1), scored.size());
  std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(k), scored.end(),
                    [](const auto& a, const auto& b) { return a.first != b.first ? a.first > b.first : a.second < b.second; });
  std::vector<int> out;
  for (std::size_t i = 0; i < k; ++i) out.push_back(scored[i].second);
  return out;
}

namespace {

double fused_against(const PreparedCandidate& cand, const HanziTemplate& e, const CompareOptions& opts,
                     const std::vector<float>* emb1, const std::vector<float>* emb2) {
  if (cand.skeleton.empty() && opts.use_skeleton) {
    CompareOptions o = opts;
    o.use_skeleton = false;
    SimilarityReport r = compare_patches(cand.patch, e.patch, o, nullptr, nullptr, emb1, emb2);
    r.s_skel = std::exp(-1.0);
    return fuse(r, opts.fusion);
  }
  return compare_patches(cand.patch, e.patch, opts, &cand.skeleton, &e.skeleton, emb1, emb2).fused;
}

}  // namespace

std::vector<double> full_scan_scores(const PreparedCandidate& cand, const HanziTemplateTable& table,
                                     const CompareOptions& opts) {
  std::vector<double> out;
  out.reserve(table.entries.size());
  for (const auto& e : table.entries) out.push_back(fused_against(cand, e, opts, nullptr, nullptr));
  return out;
}

Recognition match_character(const CharCandidate& candidate, const HanziTemplateTable& table,
                            const MatchOptions& opts, const EmbeddingTable* embeddings,
                            const std::string& candidate_id) {
  if (table.entries.empty()) throw std::invalid_argument("empty template table");
  Recognition rec;
  rec.box = candidate.box;
  const PreparedCandidate cand = prepare_candidate(candidate.patch, table.canvas);
  if (cand.patch.sum() <= 0.0) return rec;
  const std::vector<float>* emb1 = embeddings && !candidate_id.empty() ? embeddings->find(candidate_id) : nullptr;

  double best = -1.0, second = -1.0;
  int best_i = -1, second_i = -1;
  for (int i : prune_templates(cand, table, opts)) {
    const auto& e = table.entries[i];
    const std::vector<float>* emb2 = emb1 ? embeddings->find(e.character) : nullptr;
    const double s = fused_against(cand, e, opts.compare, emb1, emb2 ? emb2 : nullptr);
    // Survivors arrive best-pruned first; strict comparison keeps the earlier.
    if (s > best) {
      second = best;
      second_i = best_i;
      best = s;
      best_i = i;
    } else if (s > second) {
      second = s;
      second_i = i;
    }
  }
  rec.character = table.entries[best_i].character;
  rec.score = best;
  if (second_i >= 0) {
    rec.runner_up = table.entries[second_i].character;
    rec.runner_up_score = second;
  }
  return rec;
}

std::vector<Recognition> recognize_page(const GrayImage& page, const HanziTemplateTable& table,
                                        const LyricOptions& opts, const EmbeddingTable* embeddings,
                                        const std::string& page_id) {
  const auto cands = extract_candidates(page, opts.candidates);
  std::vector<Recognition> recs;
  for (std::size_t i = 0; i < cands.size(); ++i) {
    const std::string id = page_id.empty() ? std::string{} : fmt::format("{}#{}", page_id, i);
    Recognition r = match_character(cands[i], table, opts.match, embeddings, id);
    if (!r.character.empty() && r.score >= opts.accept_threshold) recs.push_back(std::move(r));
  }
  std::stable_sort(recs.begin(), recs.end(), [](const Recognition& a, const Recognition& b) { return a.score > b.score; });
  std::vector<Recognition> kept;
  for (auto& r : recs) {
    const bool clash = std::any_of(kept.begin(), kept.end(),
                                   [&](const Recognition& k) { return box_iou(k.box, r.box) > opts.overlap_iou; });
    if (!clash) kept.push_back(std::move(r));
  }
  std::sort(kept.begin(), kept.end(), [](const Recognition& a, const Recognition& b) {
    return std::tie(a.box.y0, a.box.x0) < std::tie(b.box.y0, b.box.x0);
  });
  return kept;
}

CalibrationResult calibrate_fusion(const std::vector<CalibrationSample>& samples, const HanziTemplateTable& table,
                                   const MatchOptions& opts, double weight_step,
                                   const std::vector<double>& gamma_grid) {
  if (samples.empty()) throw std::invalid_argument("calibration needs at least one sample");
  if (weight_step <= 0.0 || weight_step > 1.0) throw std::invalid_argument("weight_step must lie in (0, 1]");
  if (gamma_grid.empty()) throw std::invalid_argument("empty gamma grid");

  struct Scored {
    std::vector<SimilarityReport> reports;
    int truth = -1;  // index into reports, -1 when pruned away
  };
  std::vector<Scored> scored;
  for (const auto& s : samples) {
    const PreparedCandidate cand = prepare_candidate(s.patch, table.canvas);
    Scored sc;
    for (int idx : prune_templates(cand, table, opts)) {
      const HanziTemplate& e = table.entries[idx];
      CompareOptions o = opts.compare;
      SimilarityReport r;
      if (cand.skeleton.empty() && o.use_skeleton) {
        o.use_skeleton = false;
        r = compare_patches(cand.patch, e.patch, o);
        r.s_skel = std::exp(-1.0);
      } else {
        r = compare_patches(cand.patch, e.patch, o, &cand.skeleton, &e.skeleton);
      }
      if (e.character == s.label) sc.truth = static_cast<int>(sc.reports.size());
      sc.reports.push_back(r);
    }
    scored.push_back(std::move(sc));
  }

  auto evaluate = [&](const FusionParams& p) {
    int correct = 0;
    double margin = 0.0;
    for (const auto& sc : scored) {
      if (sc.truth < 0) continue;
      const double t = fuse(sc.reports[sc.truth], p);
      double rival = 0.0;
      bool beaten = false;
      for (int i = 0; i < static_cast<int>(sc.reports.size()); ++i) {
        if (i == sc.truth) continue;
        const double v = fuse(sc.reports[i], p);
        rival = std::max(rival, v);
        beaten = beaten || v > t || (v == t && i < sc.truth);
      }
      correct += beaten ? 0 : 1;
      margin += t - rival;
    }
    return std::pair<double, double>{static_cast<double>(correct) / scored.size(), margin / scored.size()};
  };

  CalibrationResult best;
  best.samples = static_cast<int>(samples.size());
  best.params = opts.compare.fusion;
  best.params.weights[kEmbedding] = 0.0;
  const auto base = evaluate(best.params);
  best.baseline_accuracy = base.first;
  best.accuracy = base.first;
  double best_margin = base.second;

  const bool skel = opts.compare.use_skeleton;
  const int steps = static_cast<int>(std::lround(1.0 / weight_step));
  const std::size_t ng = gamma_grid.size();
  const std::size_t gamma_combos = skel ? ng * ng * ng : ng * ng;
  for (int a = 0; a <= steps; ++a) {
    for (int b = 0; a + b <= steps; ++b) {
      const int c = steps - a - b;
      if (!skel && c != 0) continue;
      FusionParams p;
      p.weights = {static_cast<double>(a) / steps, static_cast<double>(b) / steps, static_cast<double>(c) / steps, 0.0};
      for (std::size_t g = 0; g < gamma_combos; ++g) {
        p.gammas = {gamma_grid[g % ng], gamma_grid[(g / ng) % ng], skel ? gamma_grid[(g / ng / ng) % ng] : 1.0, 1.0};
        const auto [acc, margin] = evaluate(p);
        if (acc > best.accuracy || (acc == best.accuracy && margin > best_margin)) {
          best.accuracy = acc;
          best_margin = margin;
          best.params = p;
        }
      }
    }
  }
  return best;
}

nlohmann::json recognitions_to_json(const std::string& page, const std::vector<Recognition>& recs) {
  nlohmann::json chars = nlohmann::json::array();
  for (const auto& r : recs) {
    nlohmann::json j = {{"ch", r.character}, {"box", {r.box.x0, r.box.y0, r.box.x1, r.box.y1}}, {"score", r.score}};
    j["runner_up"] = r.runner_up.empty() ? nlohmann::json(nullptr)
                                         : nlohmann::json{{"ch", r.runner_up}, {"score", r.runner_up_score}};
    chars.push_back(std::move(j));
  }
  return {{"page", page}, {"chars", std::move(chars)}};
}

std::vector<Recognition> recognitions_from_json(const nlohmann::json& doc) {
  std::vector<Recognition> out;
  for (const auto& j : doc.at("chars")) {
    Recognition r;
    r.character = j.at("ch").get<std::string>();
    const auto& b = j.at("box");
    r.box = {b.at(0).get<int>(), b.at(1).get<int>(), b.at(2).get<int>(), b.at(3).get<int>()};
    r.score = j.value("score", 1.0);
    if (j.contains("runner_up") && !j["runner_up"].is_null()) {
      r.runner_up = j["runner_up"].at("ch").get<std::string>();
      r.runner_up_score = j["runner_up"].at("score").get<double>();
    }
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace jianpu
