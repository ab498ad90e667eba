#include "jianpu/symboldetect.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include <spdlog/spdlog.h>

#include "fft.hpp"

namespace jianpu {

namespace {

constexpr std::array<const char*, 9> kKindNames = {
    "digit", "rest", "octave_dot", "augmentation_dot", "underline",
    "dash",  "barline", "tie_slur", "lyric_candidate"};

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

SymbolDetection make_detection(SymbolKind kind, const BoundingBox& box, double score,
                               std::optional<int> value = std::nullopt) {
  SymbolDetection d;
  d.kind = kind;
  d.value = value;
  d.box = box;
  d.score = std::clamp(score, 0.0, 1.0);
  d.center = {box.center_x(), box.center_y()};
  return d;
}

// Cross-correlation of a precomputed page spectrum with one template,
// normalised by the local window energy.
FloatRaster correlate_spectrum(const detail::Spectrum& page_spec, const FloatRaster& log_page,
                               const std::vector<double>& integral, const std::vector<double>& integral_sq,
                               const DigitTemplate& tmpl) {
  const int th = tmpl.raster.height, tw = tmpl.raster.width;
  const int oh = log_page.height - th + 1, ow = log_page.width - tw + 1;
  if (oh < 1 || ow < 1) throw std::invalid_argument("template larger than page");

  const detail::Spectrum tspec =
      detail::forward_fft(tmpl.raster.data.data(), th, tw, page_spec.height, page_spec.width);
  detail::Spectrum prod = page_spec;
  for (std::size_t i = 0; i < prod.bins.size(); ++i) prod.bins[i] *= std::conj(tspec.bins[i]);
  const std::vector<double> corr = detail::inverse_fft(prod);
  const double norm = 1.0 / (static_cast<double>(page_spec.height) * page_spec.width);

  double tnorm = 0.0;
  for (float v : tmpl.raster.data) tnorm += static_cast<double>(v) * v;
  tnorm = std::sqrt(tnorm);

  const int iw = log_page.width + 1;
  auto box_sum = [&](const std::vector<double>& s, int y, int x) {
    return s[static_cast<std::size_t>(y + th) * iw + (x + tw)] - s[static_cast<std::size_t>(y) * iw + (x + tw)] -
           s[static_cast<std::size_t>(y + th) * iw + x] + s[static_cast<std::size_t>(y) * iw + x];
  };
  const double n = static_cast<double>(th) * tw;
  FloatRaster out(oh, ow, 0.0f);
  for (int y = 0; y < oh; ++y) {
    for (int x = 0; x < ow; ++x) {
      const double s1 = box_sum(integral, y, x);
      const double s2 = box_sum(integral_sq, y, x);
      const double energy = s2 - s1 * s1 / n;
      if (energy <= 1e-10 || tnorm <= 0.0) continue;
      const double c = corr[static_cast<std::size_t>(y) * page_spec.width + x] * norm;
      out(y, x) = static_cast<float>(std::clamp(c / (tnorm * std::sqrt(energy)), -1.0, 1.0));
    }
  }
  return out;
}

struct PreparedPage {
  FloatRaster log_page;
  detail::Spectrum spectrum;
  std::vector<double> integral;
  std::vector<double> integral_sq;
};

PreparedPage prepare_page(FloatRaster log_page) {
  PreparedPage p;
  p.log_page = std::move(log_page);
  const int h = p.log_page.height, w = p.log_page.width;
  p.spectrum = detail::forward_fft(p.log_page.data.data(), h, w, detail::fft_good_size(h),
                                   detail::fft_good_size(w));
  const int iw = w + 1;
  p.integral.assign(static_cast<std::size_t>(h + 1) * iw, 0.0);
  p.integral_sq.assign(static_cast<std::size_t>(h + 1) * iw, 0.0);
  for (int y = 0; y < h; ++y) {
    double row = 0.0, row_sq = 0.0;
    for (int x = 0; x < w; ++x) {
      const double v = p.log_page(y, x);
      row += v;
      row_sq += v * v;
      const std::size_t i = static_cast<std::size_t>(y + 1) * iw + (x + 1);
      p.integral[i] = p.integral[i - iw] + row;
      p.integral_sq[i] = p.integral_sq[i - iw] + row_sq;
    }
  }
  return p;
}

}  // namespace

std::string to_string(SymbolKind kind) { return kKindNames[static_cast<int>(kind)]; }

SymbolKind symbol_kind_from_string(const std::string& name) {
  for (std::size_t i = 0; i < kKindNames.size(); ++i) {
    if (name == kKindNames[i]) return static_cast<SymbolKind>(i);
  }
  throw std::invalid_argument("unknown symbol kind: " + name);
}

nlohmann::json to_json(const DetectionPage& page) {
  nlohmann::json dets = nlohmann::json::array();
  for (const auto& d : page.detections) {
    nlohmann::json j = {{"kind", to_string(d.kind)},
                        {"box", {d.box.x0, d.box.y0, d.box.x1, d.box.y1}},
                        {"score", d.score},
                        {"center", {d.center.x, d.center.y}}};
    if (d.value) j["value"] = *d.value;
    dets.push_back(std::move(j));
  }
  return {{"page", page.page}, {"detections", std::move(dets)}};
}

DetectionPage detection_page_from_json(const nlohmann::json& doc) {
  DetectionPage page;
  page.page = doc.at("page").get<std::string>();
  for (const auto& j : doc.at("detections")) {
    SymbolDetection d;
    d.kind = symbol_kind_from_string(j.at("kind").get<std::string>());
    if (j.contains("value")) d.value = j.at("value").get<int>();
    const auto& b = j.at("box");
    d.box = {b.at(0).get<int>(), b.at(1).get<int>(), b.at(2).get<int>(), b.at(3).get<int>()};
    d.score = j.at("score").get<double>();
    const auto& c = j.at("center");
    d.center = {c.at(0).get<double>(), c.at(1).get<double>()};
    page.detections.push_back(d);
  }
  return page;
}

FontMetrics TemplateSet::seed_metrics() const {
  std::vector<double> ws, hs;
  for (const auto& t : templates) {
    ws.push_back(t.ink_box.width());
    hs.push_back(t.ink_box.height());
  }
  return {median(ws), median(hs)};
}

TemplateSet build_template_set(const std::map<int, GrayImage>& glyphs, double sigma,
                               const std::map<int, FloatRaster>& accent_masks) {
  TemplateSet set;
  set.sigma = sigma;
  for (int d = 0; d < 8; ++d) {
    const auto it = glyphs.find(d);
    if (it == glyphs.end()) throw std::invalid_argument("missing glyph for digit " + std::to_string(d));
    const GrayImage& glyph = it->second;
    FloatRaster t = log_filter(glyph, sigma);
    if (const auto acc = accent_masks.find(d); acc != accent_masks.end()) {
      if (acc->second.height != t.height || acc->second.width != t.width) {
        throw std::invalid_argument("accent mask size mismatch for digit " + std::to_string(d));
      }
      // Accents are authored in units of the template's peak magnitude.
      float peak = 0.0f;
      for (float v : t.data) peak = std::max(peak, std::abs(v));
      for (std::size_t i = 0; i < t.data.size(); ++i) t.data[i] += peak * acc->second.data[i];
    }
    const double mean = std::accumulate(t.data.begin(), t.data.end(), 0.0) / t.data.size();
    double norm = 0.0;
    for (auto& v : t.data) {
      v = static_cast<float>(v - mean);
      norm += static_cast<double>(v) * v;
    }
    norm = std::sqrt(norm);
    if (norm <= 0.0) throw std::invalid_argument("blank glyph for digit " + std::to_string(d));
    for (auto& v : t.data) v = static_cast<float>(v / norm);

    DigitTemplate& dt = set.templates[d];
    dt.digit = d;
    dt.raster = std::move(t);
    dt.ink_box = ink_bounds(glyph, 0.5f);
    if (!dt.ink_box.valid()) dt.ink_box = {0, 0, glyph.width(), glyph.height()};
    dt.anchor_x = glyph.width() / 2;
    dt.anchor_y = glyph.height() / 2;
  }
  return set;
}

TemplateSet load_template_set(const std::filesystem::path& asset_dir, double sigma) {
  std::map<int, GrayImage> glyphs;
  std::map<int, FloatRaster> accents;
  for (int d = 0; d < 8; ++d) {
    glyphs.emplace(d, load_image(asset_dir / "digits" / (std::to_string(d) + ".png")));
    const auto acc = asset_dir / "accents" / (std::to_string(d) + ".pgm");
    if (std::filesystem::exists(acc)) accents.emplace(d, load_signed_pgm(acc));
  }
  return build_template_set(glyphs, sigma, accents);
}

FloatRaster correlate(const FloatRaster& log_page, const DigitTemplate& tmpl) {
  const PreparedPage p = prepare_page(log_page);
  return correlate_spectrum(p.spectrum, p.log_page, p.integral, p.integral_sq, tmpl);
}

FloatRaster correlate(const GrayImage& page, const DigitTemplate& tmpl, double sigma) {
  return correlate(log_filter(page, sigma), tmpl);
}

std::vector<Peak> extract_peaks(const FloatRaster& response, double threshold, double nms_radius) {
  std::vector<Peak> peaks;
  const int r = static_cast<int>(std::floor(nms_radius));
  const double r2 = nms_radius * nms_radius;
  for (int y = 0; y < response.height; ++y) {
    for (int x = 0; x < response.width; ++x) {
      const float v = response(y, x);
      if (v < threshold) continue;
      bool is_max = true;
      for (int dy = -r; dy <= r && is_max; ++dy) {
        for (int dx = -r; dx <= r; ++dx) {
          if (dx == 0 && dy == 0) continue;
          if (dx * dx + dy * dy > r2) continue;
          const int yy = y + dy, xx = x + dx;
          if (!response.contains(yy, xx)) continue;
          const float u = response(yy, xx);
          // Earlier (y, x) wins ties.
          const bool earlier = dy < 0 || (dy == 0 && dx < 0);
          if (u > v || (u == v && earlier)) {
            is_max = false;
            break;
          }
        }
      }
      if (is_max) peaks.push_back({x, y, v});
    }
  }
  return peaks;
}

std::vector<SymbolDetection> detect_digits(const GrayImage& page, const TemplateSet& templates,
                                           const DigitDetectOptions& opts) {
  const PreparedPage prepared = prepare_page(log_filter(page, templates.sigma));
  const FontMetrics seed = templates.seed_metrics();
  const double radius = std::max(1.0, opts.nms_fraction * seed.digit_width);

  struct Candidate {
    SymbolDetection det;
    int digit;
  };
  std::vector<BoundingBox> strokes;
  for (const auto& comp : connected_components(binarize(page, opts.stroke_threshold), 8)) {
    if (comp.box.height() > 2 * comp.box.width()) strokes.push_back(comp.box);
  }
  auto on_stroke = [&](const BoundingBox& b) {
    return std::any_of(strokes.begin(), strokes.end(), [&](const BoundingBox& s) {
      return s.height() >= 1.2 * b.height() && s.width() <= 1.5 * std::max(1, b.width()) &&
             intersection_area(s, b) > 0;
    });
  };

  std::vector<Candidate> cands;
  for (const auto& tmpl : templates.templates) {
    if (tmpl.raster.height > page.height() || tmpl.raster.width > page.width()) continue;
    const FloatRaster resp =
        correlate_spectrum(prepared.spectrum, prepared.log_page, prepared.integral, prepared.integral_sq, tmpl);
    for (const auto& pk : extract_peaks(resp, opts.threshold, radius)) {
      const BoundingBox box{pk.x + tmpl.ink_box.x0, pk.y + tmpl.ink_box.y0, pk.x + tmpl.ink_box.x1,
                            pk.y + tmpl.ink_box.y1};
      if (on_stroke(box)) continue;
      const SymbolKind kind = tmpl.digit == 0 ? SymbolKind::rest : SymbolKind::digit;
      cands.push_back({make_detection(kind, box, pk.score, tmpl.digit), tmpl.digit});
    }
  }
  std::sort(cands.begin(), cands.end(), [](const Candidate& a, const Candidate& b) {
    if (a.det.score != b.det.score) return a.det.score > b.det.score;
    if (a.det.box.y0 != b.det.box.y0) return a.det.box.y0 < b.det.box.y0;
    if (a.det.box.x0 != b.det.box.x0) return a.det.box.x0 < b.det.box.x0;
    return a.digit < b.digit;
  });
  std::vector<SymbolDetection> kept;
  for (const auto& c : cands) {
    const bool overlaps = std::any_of(kept.begin(), kept.end(), [&](const SymbolDetection& k) {
      return box_iou(k.box, c.det.box) > opts.overlap_iou;
    });
    if (!overlaps) kept.push_back(c.det);
  }
  std::sort(kept.begin(), kept.end(), [](const SymbolDetection& a, const SymbolDetection& b) {
    return a.center.y != b.center.y ? a.center.y < b.center.y : a.center.x < b.center.x;
  });
  return kept;
}

FontMetrics estimate_font_metrics(const std::vector<SymbolDetection>& digits,
                                  const FontMetrics& fallback) {
  std::vector<double> ws, hs;
  for (const auto& d : digits) {
    if (!is_note_kind(d.kind)) continue;
    ws.push_back(d.box.width());
    hs.push_back(d.box.height());
  }
  if (ws.empty()) return fallback;
  return {median(ws), median(hs)};
}

// --- Structural symbols --------------------------------------------------

std::vector<SymbolDetection> detect_structural(const GrayImage& page,
                                               const std::vector<SymbolDetection>& digits,
                                               const FontMetrics& metrics,
                                               const StructuralOptions& opts) {
  std::vector<SymbolDetection> out;
  std::vector<const SymbolDetection*> notes;
  for (const auto& d : digits) {
    if (is_note_kind(d.kind)) notes.push_back(&d);
  }
  if (notes.empty()) return out;

  const double w = metrics.digit_width;
  const double h = metrics.digit_height;
  BinaryImage bin = binarize(page, opts.binarize_threshold);
  for (const auto* d : notes) {
    for (int y = std::max(0, d->box.y0 - 2); y < std::min(bin.height, d->box.y1 + 2); ++y) {
      for (int x = std::max(0, d->box.x0 - 2); x < std::min(bin.width, d->box.x1 + 2); ++x) {
        bin.set(y, x, false);
      }
    }
  }

  auto in_band = [&](const BoundingBox& b, const SymbolDetection& d) {
    return b.y0 >= d.box.y0 - opts.band_above * h && b.y1 <= d.box.y1 + opts.band_below * h;
  };

  for (const auto& comp : connected_components(bin, 8)) {
    const BoundingBox& b = comp.box;
    if (comp.area < 3) continue;
    const double bw = b.width(), bh = b.height();

    // Barline: tall thin stroke crossing a digit row.
    if (bh >= opts.barline_height_min * h && bw <= 0.35 * w) {
      const bool crosses_row = std::any_of(notes.begin(), notes.end(), [&](const SymbolDetection* d) {
        return d->center.y >= b.y0 && d->center.y <= b.y1 && std::abs(d->center.x - b.center_x()) <= 12 * w;
      });
      if (crosses_row) out.push_back(make_detection(SymbolKind::barline, b, 1.0));
      continue;
    }

    // Horizontal strokes: underlines (split per covered digit) or dashes.
    if (bh <= opts.line_height_max * h && bw >= opts.line_width_min * w && bw >= 2.5 * bh) {
      bool is_underline = false;
      for (const auto* d : notes) {
        const int overlap = std::min(b.x1, d->box.x1) - std::max(b.x0, d->box.x0);
        if (overlap < 0.3 * d->box.width()) continue;
        if (b.y0 < d->box.y1 - 0.05 * h || b.y1 > d->box.y1 + opts.band_below * h) continue;
        BoundingBox seg{std::max(b.x0, static_cast<int>(std::floor(d->box.x0 - 0.25 * w))), b.y0,
                        std::min(b.x1, static_cast<int>(std::ceil(d->box.x1 + 0.25 * w))), b.y1};
        out.push_back(make_detection(SymbolKind::underline, seg, 1.0));
        is_underline = true;
      }
      if (is_underline) continue;
      const bool overlaps_digit = std::any_of(notes.begin(), notes.end(), [&](const SymbolDetection* d) {
        return std::min(b.x1, d->box.x1) > std::max(b.x0, d->box.x0) && in_band(b, *d);
      });
      const bool after_digit = std::any_of(notes.begin(), notes.end(), [&](const SymbolDetection* d) {
        return d->box.x1 <= b.x0 && b.x0 - d->box.x1 <= 12 * w && b.center_y() >= d->box.y0 + 0.2 * h &&
               b.center_y() <= d->box.y1 - 0.2 * h;
      });
      if (!overlaps_digit && after_digit) out.push_back(make_detection(SymbolKind::dash, b, 1.0));
      continue;
    }

    // Dots: compact blobs next to a digit.
    const double area_ratio = comp.area / metrics.digit_area();
    const double aspect = bw / bh;
    if (area_ratio >= opts.dot_area_min && area_ratio <= opts.dot_area_max &&
        aspect >= opts.dot_aspect_min && aspect <= opts.dot_aspect_max) {
      const SymbolDetection* nearest = nullptr;
      double best = 1e300;
      for (const auto* d : notes) {
        if (!in_band(b, *d)) continue;
        const double dx = b.center_x() - d->center.x;
        if (std::abs(dx) > 1.5 * w + 0.5 * d->box.width()) continue;
        const double dist = std::hypot(dx, b.center_y() - d->center.y);
        if (dist < best) {
          best = dist;
          nearest = d;
        }
      }
      if (!nearest) continue;
      const bool beside = b.center_y() >= nearest->box.y0 && b.center_y() <= nearest->box.y1 &&
                          b.center_x() > nearest->box.x1;
      out.push_back(make_detection(beside ? SymbolKind::augmentation_dot : SymbolKind::octave_dot, b,
                                   1.0));
    }
  }
  return out;
}

// --- Ties and slurs ------------------------------------------------------

ChainGeometry analyze_chain(const Chain& chain) {
  ChainGeometry g;
  std::vector<PointF> pts = chain.smoothed;
  if (pts.empty()) {
    for (const auto& p : chain.points) pts.push_back({double(p.x), double(p.y)});
  }
  if (pts.size() < 2) return g;
  double x0 = 1e300, x1 = -1e300, y0 = 1e300, y1 = -1e300;
  for (const auto& p : pts) {
    x0 = std::min(x0, p.x);
    x1 = std::max(x1, p.x);
    y0 = std::min(y0, p.y);
    y1 = std::max(y1, p.y);
  }
  g.span_x = x1 - x0;
  g.span_y = y1 - y0;
  g.flatness = g.span_x > 0 ? g.span_y / g.span_x : 1e9;

  const PointF a = pts.front(), b = pts.back();
  const double cx = b.x - a.x, cy = b.y - a.y;
  const double clen = std::hypot(cx, cy);
  double best = 0.0;
  double best_signed = 0.0;
  for (const auto& p : pts) {
    // Signed distance; positive means below the chord in image coords when
    // the chord runs left to right.
    const double s = clen > 0 ? ((p.x - a.x) * cy - (p.y - a.y) * cx) / clen : 0.0;
    if (std::abs(s) > best) {
      best = std::abs(s);
      best_signed = s;
    }
  }
  g.sagitta = best;
  // With the chord oriented left to right, a positive cross product puts the
  // point above (smaller y).
  const bool left_to_right = cx >= 0;
  g.arc_up = left_to_right ? best_signed > 0 : best_signed < 0;

  // Count sign changes of dy along the chain, sampling every few points and
  // ignoring sub-pixel jitter.
  const std::size_t stride = std::max<std::size_t>(1, pts.size() / 12);
  int last_sign = 0;
  for (std::size_t i = stride; i < pts.size(); i += stride) {
    const double dy = pts[i].y - pts[i - stride].y;
    const int sign = dy > 0.5 ? 1 : (dy < -0.5 ? -1 : 0);
    if (sign == 0) continue;
    if (last_sign != 0 && sign != last_sign) ++g.dy_sign_changes;
    last_sign = sign;
  }

  const std::size_t k = std::min<std::size_t>(4, pts.size() - 1);
  constexpr double kDeg = 180.0 / 3.14159265358979323846;
  g.start_slope_deg = std::atan2(-(pts[k].y - pts[0].y), pts[k].x - pts[0].x) * kDeg;
  const std::size_t n = pts.size() - 1;
  g.end_slope_deg = std::atan2(-(pts[n].y - pts[n - k].y), pts[n].x - pts[n - k].x) * kDeg;
  return g;
}

bool accept_tie_slur(const ChainGeometry& geom, const FontMetrics& metrics, const TieSlurOptions& opts) {
  if (geom.span_x <= 0.0) return false;
  if (geom.span_x < opts.min_span * metrics.digit_width) return false;
  if (geom.flatness > opts.max_flatness) return false;
  if (geom.dy_sign_changes > opts.max_sign_changes) return false;
  if (!geom.arc_up) return false;
  return geom.sagitta >= opts.min_sagitta_px && geom.sagitta >= opts.min_sagitta_ratio * geom.span_x;
}

std::vector<SymbolDetection> detect_ties_slurs(const GrayImage& page, const FontMetrics& metrics,
                                               const TieSlurOptions& opts) {
  BinaryImage bin = binarize(page, opts.binarize_threshold);
  bin = morph(bin, MorphOp::close, opts.close_radius);
  bin = morph(bin, MorphOp::open, opts.open_radius);
  const BinaryImage skel = zhang_suen_thin(bin);
  const SkeletonGraph graph = build_skeleton_graph(skel);

  std::vector<SymbolDetection> out;
  for (int c = 0; c < static_cast<int>(graph.components.size()); ++c) {
    if (graph.components[c].size() < 5) continue;
    const Chain chain = smooth_chain(longest_chain(graph, c), opts.smooth_window);
    const ChainGeometry geom = analyze_chain(chain);
    if (!accept_tie_slur(geom, metrics, opts)) continue;
    BoundingBox box{graph.width, graph.height, 0, 0};
    for (const auto& p : chain.points) {
      box.x0 = std::min(box.x0, p.x);
      box.y0 = std::min(box.y0, p.y);
      box.x1 = std::max(box.x1, p.x + 1);
      box.y1 = std::max(box.y1, p.y + 1);
    }
    out.push_back(make_detection(SymbolKind::tie_slur, box, 1.0));
  }
  std::sort(out.begin(), out.end(), [](const SymbolDetection& a, const SymbolDetection& b) {
    return a.box.y0 != b.box.y0 ? a.box.y0 < b.box.y0 : a.box.x0 < b.box.x0;
  });
  return out;
}

}  // namespace jianpu
