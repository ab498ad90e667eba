#include "jianpu/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <spdlog/spdlog.h>

namespace jianpu {

namespace {

constexpr double kPi = 3.14159265358979323846;
const double kInvPhi = (std::sqrt(5.0) - 1.0) / 2.0;

std::vector<double> rotated_row_sums(const FloatRaster& img, double degrees) {
  const double a = degrees * kPi / 180.0;
  const double c = std::cos(a);
  const double s = std::sin(a);
  const double cx = 0.5 * (img.width - 1);
  const double cy = 0.5 * (img.height - 1);
  std::vector<double> rows(img.height, 0.0);
  auto px = [&](int y, int x) -> double { return img.contains(y, x) ? img(y, x) : 0.0; };
  for (int y = 0; y < img.height; ++y) {
    const double dy = y - cy;
    double acc = 0.0;
    for (int x = 0; x < img.width; ++x) {
      const double dx = x - cx;
      const double sx = cx + c * dx + s * dy;
      const double sy = cy - s * dx + c * dy;
      const int x0 = static_cast<int>(std::floor(sx));
      const int y0 = static_cast<int>(std::floor(sy));
      if (x0 < -1 || y0 < -1 || x0 >= img.width || y0 >= img.height) continue;
      const double fx = sx - x0;
      const double fy = sy - y0;
      acc += (1 - fy) * ((1 - fx) * px(y0, x0) + fx * px(y0, x0 + 1)) +
             fy * ((1 - fx) * px(y0 + 1, x0) + fx * px(y0 + 1, x0 + 1));
    }
    rows[y] = acc;
  }
  return rows;
}

double entropy_at(const FloatRaster& img, double degrees) {
  return normalized_entropy(rotated_row_sums(img, degrees));
}

}  // namespace

// --- Lighting ------------------------------------------------------------

int otsu_bin(const Histogram& hist) {
  const int n = hist.bin_count();
  int nonempty = 0;
  for (auto c : hist.bins) nonempty += c > 0;
  if (nonempty < 2) throw LightingError("Otsu threshold needs at least two occupied bins");

  const double total = static_cast<double>(hist.total);
  double sum_all = 0.0;
  for (int b = 0; b < n; ++b) sum_all += hist.value_sums[b];

  std::vector<double> variance(n, -1.0);
  double w0 = 0.0, s0 = 0.0, best = -1.0;
  for (int t = 1; t < n; ++t) {
    w0 += static_cast<double>(hist.bins[t - 1]);
    s0 += hist.value_sums[t - 1];
    const double w1 = total - w0;
    if (w0 <= 0.0 || w1 <= 0.0) continue;
    const double mu0 = s0 / w0;
    const double mu1 = (sum_all - s0) / w1;
    const double p0 = w0 / total;
    const double p1 = w1 / total;
    variance[t] = p0 * p1 * (mu0 - mu1) * (mu0 - mu1);
    best = std::max(best, variance[t]);
  }
  for (int t = 1; t < n; ++t) {
    if (variance[t] >= 0.0 && variance[t] >= best - 1e-12) return t;
  }
  throw LightingError("Otsu threshold undefined");
}

double otsu_threshold(const Histogram& hist) {
  return static_cast<double>(otsu_bin(hist)) / hist.bin_count();
}

LightingProfile estimate_lighting(const GrayImage& img, const LightingTargets& targets) {
  const Histogram hist = histogram(img);
  int nonempty = 0;
  for (auto c : hist.bins) nonempty += c > 0;
  if (nonempty < 2) throw LightingError("degenerate image: single intensity");

  LightingProfile p;
  p.alpha = targets.alpha;
  p.v_bgt = targets.v_bgt;
  p.v_fgt = targets.v_fgt;

  const int bg_bin = hist.quantile_bin(targets.alpha);
  p.v_bg_cut = hist.quantile(targets.alpha);
  p.v_bg = hist.mean_between(0, bg_bin);

  const int fg_bin = otsu_bin(hist);
  p.v_fg_cut = static_cast<double>(fg_bin) / hist.bin_count();
  p.v_fg = hist.mean_between(fg_bin, hist.bin_count() - 1);

  if (!(p.v_bg > 0.0)) throw LightingError("background intensity is zero; gamma undefined");
  if (!(p.v_fg < 1.0)) throw LightingError("foreground intensity saturated; gamma undefined");
  if (p.v_bg >= p.v_fg) throw LightingError("background not darker than foreground (inverted or blank page)");

  p.gamma1 = std::log(p.v_bgt) / std::log(p.v_bg);
  p.gamma2 = std::log(1.0 - p.v_fgt) / std::log(1.0 - p.v_fg);
  return p;
}

double dual_gamma_value(double f, double gamma1, double gamma2) {
  f = std::clamp(f, 0.0, 1.0);
  const double stage1 = std::pow(f, gamma1);
  return std::clamp(1.0 - std::pow(1.0 - stage1, gamma2), 0.0, 1.0);
}

GrayImage dual_gamma(const GrayImage& img, const LightingProfile& profile) {
  // Lookup table with linear interpolation.
  constexpr int kTable = 4096;
  std::vector<double> lut(kTable + 1);
  for (int i = 0; i <= kTable; ++i) {
    lut[i] = dual_gamma_value(static_cast<double>(i) / kTable, profile.gamma1, profile.gamma2);
  }
  std::vector<float> out(img.pixels().size());
  std::transform(img.pixels().begin(), img.pixels().end(), out.begin(), [&](float v) {
    const double pos = static_cast<double>(v) * kTable;
    const int i = std::min(static_cast<int>(pos), kTable - 1);
    const double t = pos - i;
    return static_cast<float>(lut[i] + t * (lut[i + 1] - lut[i]));
  });
  return GrayImage(img.height(), img.width(), std::move(out));
}

// --- Rotation ------------------------------------------------------------

double normalized_entropy(const std::vector<double>& mass) {
  const double total = [&] {
    double t = 0.0;
    for (double m : mass) t += std::max(m, 0.0);
    return t;
  }();
  if (mass.size() < 2 || !(total > 0.0)) return 1.0;
  double h = 0.0;
  for (double m : mass) {
    if (m <= 0.0) continue;
    const double p = m / total;
    h -= p * std::log2(p);
  }
  return h / std::log2(static_cast<double>(mass.size()));
}

ProjectionProfile projection_entropy(const GrayImage& img, double theta_degrees) {
  if (std::abs(theta_degrees) > 45.0) throw std::invalid_argument("projection angle beyond 45 degrees");
  ProjectionProfile prof;
  prof.theta = theta_degrees;
  prof.b = rotated_row_sums(img.to_raster(), theta_degrees);
  double total = 0.0;
  for (double v : prof.b) total += v;
  prof.p.assign(prof.b.size(), 0.0);
  if (total > 0.0) {
    for (std::size_t i = 0; i < prof.b.size(); ++i) prof.p[i] = prof.b[i] / total;
  }
  prof.entropy = normalized_entropy(prof.b);
  return prof;
}

GoldenSectionResult golden_section_minimize(const std::function<double(double)>& fn, double lo,
                                            double hi, double tol) {
  if (!(lo < hi)) throw std::invalid_argument("golden section needs lo < hi");
  if (!(tol > 0.0)) throw std::invalid_argument("golden section needs tol > 0");
  GoldenSectionResult r;
  double a = lo, b = hi;
  double c = b - kInvPhi * (b - a);
  double d = a + kInvPhi * (b - a);
  double fc = fn(c);
  double fd = fn(d);
  r.evaluations = 2;
  while (b - a > tol) {
    if (fc <= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - kInvPhi * (b - a);
      fc = fn(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + kInvPhi * (b - a);
      fd = fn(d);
    }
    ++r.evaluations;
  }
  r.argmin = 0.5 * (a + b);
  r.value = std::min(fc, fd);
  return r;
}

DeskewResult deskew(const GrayImage& img, const DeskewOptions& opts) {
  if (!(opts.range_degrees > 0.0 && opts.range_degrees <= 10.0)) {
    throw std::invalid_argument("deskew range must be in (0, 10] degrees");
  }
  if (!(opts.tol_degrees > 0.0)) throw std::invalid_argument("deskew tolerance must be positive");

  DeskewResult result;
  if (!(img.sum() > 0.0)) {
    spdlog::warn("deskew: blank page, angle left at 0");
    result.blank = true;
    result.corrected = img;
    return result;
  }

  const Pyramid pyr = pyramid_reduce(img, std::max(1, opts.pyramid_levels));
  const int coarsest = static_cast<int>(pyr.levels.size()) - 1;
  auto tol_at = [&](int level) { return opts.tol_degrees * std::pow(2.0, level); };

  // Coarse grid scan on the smallest level, then golden section inside the
  // best grid cell.
  const FloatRaster coarse = pyr.levels[coarsest].to_raster();
  const double step = opts.coarse_step_degrees;
  double best_angle = 0.0;
  double best_h = std::numeric_limits<double>::infinity();
  const int steps = static_cast<int>(std::floor(opts.range_degrees / step));
  for (int i = -steps; i <= steps; ++i) {
    const double t = i * step;
    const double h = entropy_at(coarse, t);
    if (h < best_h - 1e-12) {
      best_h = h;
      best_angle = t;
    }
  }
  double lo = std::max(-opts.range_degrees, best_angle - step);
  double hi = std::min(opts.range_degrees, best_angle + step);
  auto search = golden_section_minimize([&](double t) { return entropy_at(coarse, t); }, lo, hi,
                                        tol_at(coarsest));
  double angle = search.argmin;

  for (int level = coarsest - 1; level >= 0; --level) {
    const FloatRaster raster = pyr.levels[level].to_raster();
    const double half = 4.0 * tol_at(level + 1);
    lo = std::max(-opts.range_degrees, angle - half);
    hi = std::min(opts.range_degrees, angle + half);
    search = golden_section_minimize([&](double t) { return entropy_at(raster, t); }, lo, hi,
                                     tol_at(level));
    angle = search.argmin;
  }

  result.angle = angle;
  result.corrected = rotate(img, angle);
  result.entropy = projection_entropy(img, angle).entropy;
  return result;
}

}  // namespace jianpu
