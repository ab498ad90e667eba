#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace jianpu {

class ImageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Mutable row-major raster. Used for signed filter responses and as a
/// scratch buffer while building a GrayImage.
template <typename T>
struct Raster {
  int height = 0;
  int width = 0;
  std::vector<T> data;

  Raster() = default;
  Raster(int h, int w, T fill = T{})
      : height(h), width(w), data(static_cast<std::size_t>(h) * w, fill) {}

  T& operator()(int y, int x) { return data[static_cast<std::size_t>(y) * width + x]; }
  const T& operator()(int y, int x) const {
    return data[static_cast<std::size_t>(y) * width + x];
  }
  [[nodiscard]] bool contains(int y, int x) const {
    return y >= 0 && x >= 0 && y < height && x < width;
  }
  [[nodiscard]] std::size_t size() const { return data.size(); }
};

using FloatRaster = Raster<float>;

/// Axis-aligned pixel box, inclusive-exclusive: [x0, x1) x [y0, y1).
struct BoundingBox {
  int x0 = 0;
  int y0 = 0;
  int x1 = 0;
  int y1 = 0;

  [[nodiscard]] int width() const { return x1 - x0; }
  [[nodiscard]] int height() const { return y1 - y0; }
  [[nodiscard]] long long area() const {
    return static_cast<long long>(width()) * height();
  }
  [[nodiscard]] bool valid() const { return x0 < x1 && y0 < y1; }
  [[nodiscard]] double center_x() const { return 0.5 * (x0 + x1); }
  [[nodiscard]] double center_y() const { return 0.5 * (y0 + y1); }

  friend bool operator==(const BoundingBox&, const BoundingBox&) = default;
};

BoundingBox united(const BoundingBox& a, const BoundingBox& b);
long long intersection_area(const BoundingBox& a, const BoundingBox& b);
double box_iou(const BoundingBox& a, const BoundingBox& b);

/// Grayscale page or patch, ink-bright: paper ~ 0, ink ~ 1.
/// Intensities are clamped into [0,1] on construction; the image is
/// immutable afterwards.
class GrayImage {
 public:
  GrayImage() = default;
  GrayImage(int height, int width, std::vector<float> pixels);
  explicit GrayImage(FloatRaster raster);

  static GrayImage filled(int height, int width, float value);

  [[nodiscard]] int height() const { return height_; }
  [[nodiscard]] int width() const { return width_; }
  [[nodiscard]] bool empty() const { return pixels_.empty(); }
  [[nodiscard]] float at(int y, int x) const {
    return pixels_[static_cast<std::size_t>(y) * width_ + x];
  }
  [[nodiscard]] std::span<const float> pixels() const { return pixels_; }
  [[nodiscard]] FloatRaster to_raster() const;
  [[nodiscard]] double sum() const;
  [[nodiscard]] double mean() const;

  friend bool operator==(const GrayImage&, const GrayImage&) = default;

 private:
  int height_ = 0;
  int width_ = 0;
  std::vector<float> pixels_;
};

// File I/O. PNG (8-bit gray, gray+alpha, RGB, RGBA) and binary PGM (P5,
// maxval 255). Loading inverts to ink-bright: v = 1 - luma/255.
GrayImage load_image(const std::filesystem::path& path);
void save_png(const GrayImage& img, const std::filesystem::path& path);
void save_pgm(const GrayImage& img, const std::filesystem::path& path);
/// Dispatches on extension (.png or .pgm).
void save_image(const GrayImage& img, const std::filesystem::path& path);

/// Signed raster stored as 8-bit PGM with 128 as zero and 127 as unit
/// magnitude. Used for template accent masks.
FloatRaster load_signed_pgm(const std::filesystem::path& path);
void save_signed_pgm(const FloatRaster& raster, const std::filesystem::path& path);

struct Histogram {
  std::vector<std::uint64_t> bins;
  /// Sum of raw intensities falling into each bin, so class means can be
  /// computed from exact values instead of bin centres.
  std::vector<double> value_sums;
  std::uint64_t total = 0;

  [[nodiscard]] int bin_count() const { return static_cast<int>(bins.size()); }
  [[nodiscard]] int bin_of(double v) const;
  [[nodiscard]] double pdf(int bin) const;
  /// Fraction of pixels in bins [0, bin].
  [[nodiscard]] double cdf(int bin) const;
  /// Smallest bin whose cumulative fraction reaches q.
  [[nodiscard]] int quantile_bin(double q) const;
  /// Upper edge of quantile_bin(q), i.e. an intensity v with H(v) >= q.
  [[nodiscard]] double quantile(double q) const;
  /// Mean intensity of the pixels in bins [first, last].
  [[nodiscard]] double mean_between(int first, int last) const;
};

inline constexpr int kDefaultHistogramBins = 256;

Histogram histogram(const GrayImage& img, int bins = kDefaultHistogramBins);

/// Discrete Laplacian-of-Gaussian with reflect padding. The kernel is
/// zero-sum, so constant regions respond with exactly zero.
FloatRaster log_filter(const GrayImage& img, double sigma);
FloatRaster log_filter(const FloatRaster& img, double sigma);

/// Separable Gaussian blur with reflect padding.
FloatRaster gaussian_blur(const FloatRaster& img, double sigma);

struct Pyramid {
  std::vector<GrayImage> levels;
  bool truncated = false;
};

/// Level 0 is the input; each further level is blurred (sigma 1) and
/// decimated by 2x2 block averaging. Stops before a level would drop
/// below 16 px in either dimension.
Pyramid pyramid_reduce(const GrayImage& img, int levels);

GrayImage crop(const GrayImage& img, const BoundingBox& box);
/// Bilinear resize, output dims = round(dim * scale), scale in [0.25, 4].
GrayImage resize(const GrayImage& img, double scale);
/// Bilinear resample to explicit dims.
GrayImage resize_to(const GrayImage& img, int height, int width);
/// Bilinear rotation about the image centre, zero fill outside the frame.
GrayImage rotate(const GrayImage& img, double degrees);
FloatRaster rotate(const FloatRaster& img, double degrees);

/// Pads (zero) or crops to the requested size, anchored top-left.
GrayImage pad_to(const GrayImage& img, int height, int width);
/// Smallest box containing every pixel >= threshold; nullopt-like invalid
/// box (all zeros) when nothing qualifies.
BoundingBox ink_bounds(const GrayImage& img, float threshold);

}  // namespace jianpu
