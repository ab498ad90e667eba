#include "jianpu/charsim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "fft.hpp"
#include "jianpu/assignment.hpp"
#include "jianpu/preprocess.hpp"

namespace jianpu {

namespace {

double energy(const GrayImage& f) {
  double e = 0.0;
  for (float v : f.pixels()) e += static_cast<double>(v) * v;
  return e;
}

double pixel_or_zero(const GrayImage& f, int y, int x) {
  return (y < f.height() && x < f.width()) ? f.at(y, x) : 0.0;
}

double squared_distance(const PointF& p, const PointF& q) {
  const double dx = p.x - q.x, dy = p.y - q.y;
  return dx * dx + dy * dy;
}

}  // namespace

namespace {

PhaseCorrResult correlate_spectra(const detail::Spectrum& s1, const GrayImage& f2, int h, int w) {
  PhaseCorrResult r;
  detail::Spectrum cross = detail::forward_fft(f2.pixels().data(), f2.height(), f2.width(), h, w);
  std::vector<double> mags(cross.bins.size());
  double max_mag = 0.0;
  for (std::size_t i = 0; i < cross.bins.size(); ++i) {
    // F2 * conj(F1), spelled out to stay off the libgcc complex helpers.
    const double ar = cross.bins[i].real(), ai = cross.bins[i].imag();
    const double br = s1.bins[i].real(), bi = s1.bins[i].imag();
    cross.bins[i] = {ar * br + ai * bi, ai * br - ar * bi};
    mags[i] = std::sqrt(std::norm(cross.bins[i]));
    max_mag = std::max(max_mag, mags[i]);
  }
  const double floor_mag = max_mag * 1e-12;
  for (std::size_t i = 0; i < cross.bins.size(); ++i) {
    cross.bins[i] = mags[i] > floor_mag ? cross.bins[i] * (1.0 / mags[i]) : std::complex<double>(0.0, 0.0);
  }
  const std::vector<double> c = detail::inverse_fft(cross);
  const double norm = 1.0 / (static_cast<double>(h) * w);
  std::size_t best = 0;
  for (std::size_t i = 1; i < c.size(); ++i) {
    if (c[i] > c[best]) best = i;
  }
  int ty = static_cast<int>(best / w);
  int tx = static_cast<int>(best % w);
  if (ty > h / 2) ty -= h;
  if (tx > w / 2) tx -= w;
  r.t_x = tx;
  r.t_y = ty;
  r.peak = c[best] * norm;
  return r;
}

}  // namespace

PhaseCorrResult phase_correlate(const GrayImage& f1, const GrayImage& f2) {
  const double e1 = energy(f1), e2 = energy(f2);
  if (e1 <= 0.0 || e2 <= 0.0) throw ZeroEnergyError("phase correlation of a zero-energy patch");
  const int h = std::max(f1.height(), f2.height());
  const int w = std::max(f1.width(), f2.width());
  PhaseCorrResult r =
      correlate_spectra(detail::forward_fft(f1.pixels().data(), f1.height(), f1.width(), h, w), f2, h, w);
  r.e1 = e1;
  r.e2 = e2;
  return r;
}

PhaseCorrResult align_scale(const GrayImage& f1, const GrayImage& f2, const ScaleSearch& search) {
  if (!(search.lo < search.hi) || search.lo < 0.25 || search.hi > 4.0 || !(search.tol > 0.0)) {
    throw std::invalid_argument("invalid scale search range");
  }
  const double e1 = energy(f1);
  if (e1 <= 0.0 || energy(f2) <= 0.0) throw ZeroEnergyError("phase correlation of a zero-energy patch");
  // f1's spectrum depends only on the padded size; most trial scales share one.
  std::map<std::pair<int, int>, detail::Spectrum> spectra;
  auto eval = [&](double s) {
    const GrayImage g = std::abs(s - 1.0) < 1e-12 ? f2 : resize(f2, s);
    const int h = detail::fft_good_size(std::max(f1.height(), g.height()));
    const int w = detail::fft_good_size(std::max(f1.width(), g.width()));
    auto it = spectra.find({h, w});
    if (it == spectra.end()) {
      it = spectra.emplace(std::pair{h, w}, detail::forward_fft(f1.pixels().data(), f1.height(), f1.width(), h, w))
               .first;
    }
    PhaseCorrResult r = correlate_spectra(it->second, g, h, w);
    r.e1 = e1;
    r.e2 = energy(g);
    r.scale = s;
    return r;
  };
  const auto gs = golden_section_minimize([&](double s) { return -eval(s).peak; }, search.lo, search.hi, search.tol);
  PhaseCorrResult best = eval(gs.argmin);
  for (double s : {search.lo, search.hi, 1.0}) {
    if (s < search.lo || s > search.hi) continue;
    const PhaseCorrResult r = eval(s);
    if (r.peak > best.peak) best = r;
  }
  return best;
}

GrayImage shift_image(const GrayImage& img, int dx, int dy) {
  std::vector<float> out(img.pixels().size(), 0.0f);
  for (int y = 0; y < img.height(); ++y) {
    const int sy = y - dy;
    if (sy < 0 || sy >= img.height()) continue;
    for (int x = 0; x < img.width(); ++x) {
      const int sx = x - dx;
      if (sx < 0 || sx >= img.width()) continue;
      out[static_cast<std::size_t>(y) * img.width() + x] = img.at(sy, sx);
    }
  }
  return {img.height(), img.width(), std::move(out)};
}

GrayImage apply_alignment(const GrayImage& f2, const PhaseCorrResult& align, int height, int width) {
  const GrayImage scaled = std::abs(align.scale - 1.0) < 1e-12 ? f2 : resize(f2, align.scale);
  const int h = std::max(height, scaled.height());
  const int w = std::max(width, scaled.width());
  const GrayImage canvas = pad_to(scaled, h, w);
  const GrayImage moved = shift_image(canvas, -align.t_x, -align.t_y);
  return crop(moved, {0, 0, width, height});
}

double normalized_correlation(const GrayImage& f1, const GrayImage& f2) {
  const double e1 = energy(f1), e2 = energy(f2);
  if (e1 <= 0.0 || e2 <= 0.0) throw ZeroEnergyError("normalized correlation of a zero-energy patch");
  const int h = std::min(f1.height(), f2.height());
  const int w = std::min(f1.width(), f2.width());
  double dot = 0.0;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) dot += static_cast<double>(f1.at(y, x)) * f2.at(y, x);
  }
  return dot / std::sqrt(e1 * e2);
}

double minmax_iou(const GrayImage& f1, const GrayImage& f2) {
  const int h = std::max(f1.height(), f2.height());
  const int w = std::max(f1.width(), f2.width());
  double num = 0.0, den = 0.0;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double a = pixel_or_zero(f1, y, x), b = pixel_or_zero(f2, y, x);
      num += std::min(a, b);
      den += std::max(a, b);
    }
  }
  return den > 0.0 ? num / den : 1.0;
}

SkeletonMatchProblem skeleton_match(const std::vector<PointF>& a, const std::vector<PointF>& b, double lambda) {
  if (a.empty() || b.empty()) throw std::invalid_argument("skeleton matching needs nonempty point sets");
  if (!(lambda > 0.0)) throw std::invalid_argument("lambda must be positive");
  SkeletonMatchProblem p;
  p.a = a;
  p.b = b;
  p.lambda = lambda;
  const int n = static_cast<int>(a.size()), m = static_cast<int>(b.size());
  const int k = n + m;
  constexpr double kInf = std::numeric_limits<double>::infinity();
  const double pen = 0.5 * lambda * lambda;
  p.cost_matrix.assign(k, std::vector<double>(k, kInf));
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < m; ++j) {
      const double d = 0.5 * squared_distance(a[i], b[j]);
      p.cost_matrix[i][j] = d;          // D
      p.cost_matrix[n + j][m + i] = d;  // D^T
    }
    p.cost_matrix[i][m + i] = pen;  // a_i unmatched
  }
  for (int j = 0; j < m; ++j) p.cost_matrix[n + j][j] = pen;  // b_j unmatched
  const AssignmentResult r = solve_assignment(p.cost_matrix);
  p.assignment = r.row_to_col;
  p.j_star = r.cost;
  p.j_max = pen * k;
  p.s = std::exp(-p.j_star / p.j_max);
  return p;
}

double skeleton_similarity(const std::vector<PointF>& a, const std::vector<PointF>& b, double lambda,
                           double* j_star) {
  if (a.empty() || b.empty()) throw std::invalid_argument("skeleton matching needs nonempty point sets");
  if (!(lambda > 0.0)) throw std::invalid_argument("lambda must be positive");
  const std::vector<PointF>& rows = a.size() <= b.size() ? a : b;
  const std::vector<PointF>& cols = a.size() <= b.size() ? b : a;
  const double l2 = lambda * lambda;
  std::vector<std::vector<double>> cost(rows.size(), std::vector<double>(cols.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < cols.size(); ++j) cost[i][j] = std::min(squared_distance(rows[i], cols[j]), l2);
  }
  const double j = solve_assignment(cost).cost + 0.5 * l2 * static_cast<double>(cols.size() - rows.size());
  if (j_star) *j_star = j;
  const double j_max = 0.5 * l2 * static_cast<double>(a.size() + b.size());
  return std::exp(-j / j_max);
}

std::vector<PointF> skeleton_points(const GrayImage& patch, double threshold, std::size_t cap) {
  const BinaryImage skel = zhang_suen_thin(binarize(patch, threshold));
  std::vector<PointF> pts;
  for (int y = 0; y < skel.height; ++y) {
    for (int x = 0; x < skel.width; ++x) {
      if (skel.at(y, x)) pts.push_back({double(x), double(y)});
    }
  }
  if (cap == 0 || pts.size() <= cap) return pts;
  std::vector<PointF> sub;
  sub.reserve(cap);
  for (std::size_t i = 0; i < cap; ++i) sub.push_back(pts[i * pts.size() / cap]);
  return sub;
}

double embedding_cosine(const std::vector<float>& e1, const std::vector<float>& e2) {
  if (e1.size() != e2.size() || e1.empty()) throw std::invalid_argument("embedding dimension mismatch");
  double dot = 0.0, n1 = 0.0, n2 = 0.0;
  for (std::size_t i = 0; i < e1.size(); ++i) {
    dot += static_cast<double>(e1[i]) * e2[i];
    n1 += static_cast<double>(e1[i]) * e1[i];
    n2 += static_cast<double>(e2[i]) * e2[i];
  }
  if (n1 <= 0.0 || n2 <= 0.0) throw ZeroEnergyError("cosine of a zero vector");
  return std::clamp(dot / std::sqrt(n1 * n2), -1.0, 1.0);
}

double rescale_metric(MetricSlot slot, double value) {
  double r = value;
  switch (slot) {
    case kPhase:
    case kEmbedding:
      r = (value + 1.0) / 2.0;
      break;
    case kIou:
      break;
    case kSkeleton: {
      const double lo = std::exp(-1.0);
      r = (value - lo) / (1.0 - lo);
      break;
    }
  }
  return std::clamp(r, 0.0, 1.0);
}

double fuse(const SimilarityReport& report, const FusionParams& params) {
  std::array<std::optional<double>, 4> raw = {report.s_phase, report.s_iou, report.s_skel, report.s_embed};
  double wsum = 0.0;
  for (int k = 0; k < 4; ++k) {
    if (params.weights[k] < 0.0 || !std::isfinite(params.weights[k])) {
      throw std::invalid_argument("fusion weights must be finite and nonnegative");
    }
    if (!(params.gammas[k] > 0.0)) throw std::invalid_argument("fusion gammas must be positive");
    if (raw[k]) wsum += params.weights[k];
  }
  if (!(wsum > 0.0)) throw std::invalid_argument("fusion weights are not normalizable");
  double fused = 0.0;
  for (int k = 0; k < 4; ++k) {
    if (!raw[k]) continue;
    const double r = rescale_metric(static_cast<MetricSlot>(k), *raw[k]);
    fused += params.weights[k] / wsum * std::pow(r, params.gammas[k]);
  }
  return std::clamp(fused, 0.0, 1.0);
}

SimilarityReport compare_patches(const GrayImage& f1, const GrayImage& f2, const CompareOptions& opts,
                                 const std::vector<PointF>* skel1, const std::vector<PointF>* skel2,
                                 const std::vector<float>* emb1, const std::vector<float>* emb2) {
  SimilarityReport rep;
  rep.alignment = align_scale(f1, f2, opts.scale);
  const GrayImage aligned = apply_alignment(f2, rep.alignment, f1.height(), f1.width());
  const double e_aligned = energy(aligned);
  rep.s_phase = e_aligned > 0.0 ? normalized_correlation(f1, aligned) : 0.0;
  rep.s_iou = minmax_iou(f1, aligned);
  if (opts.use_skeleton) {
    std::vector<PointF> own1, own2;
    if (!skel1) {
      own1 = skeleton_points(f1);
      skel1 = &own1;
    }
    if (!skel2) {
      own2 = skeleton_points(f2);
      skel2 = &own2;
    }
    if (skel1->empty() || skel2->empty()) {
      rep.s_skel = std::exp(-1.0);
    } else {
      // Map f2's skeleton through the same resize and shift.
      const double s = rep.alignment.scale;
      std::vector<PointF> moved;
      moved.reserve(skel2->size());
      for (const auto& p : *skel2) {
        moved.push_back({(p.x + 0.5) * s - 0.5 - rep.alignment.t_x, (p.y + 0.5) * s - 0.5 - rep.alignment.t_y});
      }
      rep.s_skel = skeleton_similarity(*skel1, moved, opts.lambda);
    }
  }
  if (emb1 && emb2) rep.s_embed = embedding_cosine(*emb1, *emb2);
  rep.fused = fuse(rep, opts.fusion);
  return rep;
}

}  // namespace jianpu
