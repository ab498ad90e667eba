#include "jianpu/imaging.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>
#include <numeric>
#include <sstream>

#include <spdlog/spdlog.h>

namespace jianpu {

namespace {

constexpr double kPi = 3.14159265358979323846;

int reflect_index(int i, int n) {
  if (n == 1) return 0;
  const int period = 2 * (n - 1);
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - i;
}

std::vector<float> gaussian_kernel(double sigma, int radius) {
  std::vector<float> k(2 * radius + 1);
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    const double v = std::exp(-0.5 * i * i / (sigma * sigma));
    k[i + radius] = static_cast<float>(v);
    sum += v;
  }
  for (auto& v : k) v = static_cast<float>(v / sum);
  return k;
}

FloatRaster convolve_rows(const FloatRaster& src, const std::vector<float>& k) {
  const int r = static_cast<int>(k.size() / 2);
  FloatRaster out(src.height, src.width);
  for (int y = 0; y < src.height; ++y) {
    for (int x = 0; x < src.width; ++x) {
      double acc = 0.0;
      for (int t = -r; t <= r; ++t) acc += k[t + r] * src(y, reflect_index(x + t, src.width));
      out(y, x) = static_cast<float>(acc);
    }
  }
  return out;
}

FloatRaster convolve_cols(const FloatRaster& src, const std::vector<float>& k) {
  const int r = static_cast<int>(k.size() / 2);
  FloatRaster out(src.height, src.width);
  std::vector<double> acc(src.width);
  for (int y = 0; y < src.height; ++y) {
    std::fill(acc.begin(), acc.end(), 0.0);
    for (int t = -r; t <= r; ++t) {
      const int yy = reflect_index(y + t, src.height);
      const float w = k[t + r];
      const float* row = &src.data[static_cast<std::size_t>(yy) * src.width];
      for (int x = 0; x < src.width; ++x) acc[x] += w * row[x];
    }
    for (int x = 0; x < src.width; ++x) out(y, x) = static_cast<float>(acc[x]);
  }
  return out;
}

float sample_bilinear_zero(const FloatRaster& img, double sx, double sy) {
  const int x0 = static_cast<int>(std::floor(sx));
  const int y0 = static_cast<int>(std::floor(sy));
  const double fx = sx - x0;
  const double fy = sy - y0;
  auto px = [&](int y, int x) -> double { return img.contains(y, x) ? img(y, x) : 0.0; };
  const double v = (1 - fy) * ((1 - fx) * px(y0, x0) + fx * px(y0, x0 + 1)) +
                   fy * ((1 - fx) * px(y0 + 1, x0) + fx * px(y0 + 1, x0 + 1));
  return static_cast<float>(v);
}

float sample_bilinear_clamp(const GrayImage& img, double sx, double sy) {
  sx = std::clamp(sx, 0.0, static_cast<double>(img.width() - 1));
  sy = std::clamp(sy, 0.0, static_cast<double>(img.height() - 1));
  const int x0 = static_cast<int>(std::floor(sx));
  const int y0 = static_cast<int>(std::floor(sy));
  const int x1 = std::min(x0 + 1, img.width() - 1);
  const int y1 = std::min(y0 + 1, img.height() - 1);
  const double fx = sx - x0;
  const double fy = sy - y0;
  const double v = (1 - fy) * ((1 - fx) * img.at(y0, x0) + fx * img.at(y0, x1)) +
                   fy * ((1 - fx) * img.at(y1, x0) + fx * img.at(y1, x1));
  return static_cast<float>(v);
}

std::string lower_ext(const std::filesystem::path& p) {
  std::string ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return ext;
}

// --- PGM ---------------------------------------------------------------

void skip_pgm_space(std::istream& in) {
  for (;;) {
    const int c = in.peek();
    if (c == '#') {
      std::string line;
      std::getline(in, line);
    } else if (std::isspace(c)) {
      in.get();
    } else {
      return;
    }
  }
}

struct Bytes8 {
  int height = 0;
  int width = 0;
  std::vector<std::uint8_t> luma;
};

Bytes8 read_pgm_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ImageError("cannot open " + path.string());
  std::string magic;
  in >> magic;
  if (magic != "P5") throw ImageError(path.string() + ": not a binary PGM (P5)");
  int w = 0, h = 0, maxval = 0;
  skip_pgm_space(in);
  in >> w;
  skip_pgm_space(in);
  in >> h;
  skip_pgm_space(in);
  in >> maxval;
  if (!in || w <= 0 || h <= 0) throw ImageError(path.string() + ": malformed PGM header");
  if (maxval != 255) {
    throw ImageError(path.string() + ": unsupported bit depth (maxval " +
                     std::to_string(maxval) + ")");
  }
  in.get();
  Bytes8 out{h, w, std::vector<std::uint8_t>(static_cast<std::size_t>(w) * h)};
  in.read(reinterpret_cast<char*>(out.luma.data()), static_cast<std::streamsize>(out.luma.size()));
  if (!in) throw ImageError(path.string() + ": truncated PGM data");
  return out;
}

void write_pgm_bytes(const std::filesystem::path& path, int h, int w,
                     const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ImageError("cannot write " + path.string());
  out << "P5\n" << w << " " << h << "\n255\n";
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw ImageError("write failed: " + path.string());
}

// --- PNG ---------------------------------------------------------------

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

[[noreturn]] void png_error_fn(png_structp, png_const_charp msg) { throw ImageError(msg); }
void png_warning_fn(png_structp, png_const_charp) {}

Bytes8 read_png_bytes(const std::filesystem::path& path) {
  FilePtr fp(std::fopen(path.c_str(), "rb"));
  if (!fp) throw ImageError("cannot open " + path.string());
  png_byte sig[8];
  if (std::fread(sig, 1, 8, fp.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0) {
    throw ImageError(path.string() + ": not a PNG file");
  }
  png_structp png =
      png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, png_error_fn, png_warning_fn);
  png_infop info = png_create_info_struct(png);
  struct Guard {
    png_structp* p;
    png_infop* i;
    ~Guard() { png_destroy_read_struct(p, i, nullptr); }
  } guard{&png, &info};

  png_init_io(png, fp.get());
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);

  const int bit_depth = png_get_bit_depth(png, info);
  const int color = png_get_color_type(png, info);
  if (bit_depth != 8) {
    throw ImageError(path.string() + ": unsupported bit depth " + std::to_string(bit_depth));
  }
  if (color == PNG_COLOR_TYPE_PALETTE) {
    throw ImageError(path.string() + ": palette PNGs are not supported");
  }
  png_read_update_info(png, info);
  const int w = static_cast<int>(png_get_image_width(png, info));
  const int h = static_cast<int>(png_get_image_height(png, info));
  const int channels = png_get_channels(png, info);
  const std::size_t rowbytes = png_get_rowbytes(png, info);
  std::vector<png_byte> buf(rowbytes * h);
  std::vector<png_bytep> rows(h);
  for (int y = 0; y < h; ++y) rows[y] = buf.data() + y * rowbytes;
  png_read_image(png, rows.data());

  Bytes8 out{h, w, std::vector<std::uint8_t>(static_cast<std::size_t>(w) * h)};
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const png_byte* p = rows[y] + x * channels;
      double luma = 0.0;
      if (channels <= 2) {
        luma = p[0];
      } else {
        luma = 0.299 * p[0] + 0.587 * p[1] + 0.114 * p[2];
      }
      out.luma[static_cast<std::size_t>(y) * w + x] =
          static_cast<std::uint8_t>(std::lround(std::clamp(luma, 0.0, 255.0)));
    }
  }
  return out;
}

void write_png_bytes(const std::filesystem::path& path, int h, int w,
                     const std::vector<std::uint8_t>& bytes) {
  FilePtr fp(std::fopen(path.c_str(), "wb"));
  if (!fp) throw ImageError("cannot write " + path.string());
  png_structp png =
      png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, png_error_fn, png_warning_fn);
  png_infop info = png_create_info_struct(png);
  struct Guard {
    png_structp* p;
    png_infop* i;
    ~Guard() { png_destroy_write_struct(p, i); }
  } guard{&png, &info};
  png_init_io(png, fp.get());
  png_set_IHDR(png, info, w, h, 8, PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int y = 0; y < h; ++y) {
    png_write_row(png, const_cast<png_bytep>(bytes.data() + static_cast<std::size_t>(y) * w));
  }
  png_write_end(png, nullptr);
}

std::vector<std::uint8_t> to_paper_bytes(const GrayImage& img) {
  std::vector<std::uint8_t> bytes(img.pixels().size());
  std::transform(img.pixels().begin(), img.pixels().end(), bytes.begin(), [](float v) {
    return static_cast<std::uint8_t>(std::lround((1.0 - v) * 255.0));
  });
  return bytes;
}

}  // namespace

// --- BoundingBox ---------------------------------------------------------

BoundingBox united(const BoundingBox& a, const BoundingBox& b) {
  return {std::min(a.x0, b.x0), std::min(a.y0, b.y0), std::max(a.x1, b.x1),
          std::max(a.y1, b.y1)};
}

long long intersection_area(const BoundingBox& a, const BoundingBox& b) {
  const long long w = std::min(a.x1, b.x1) - std::max(a.x0, b.x0);
  const long long h = std::min(a.y1, b.y1) - std::max(a.y0, b.y0);
  return (w > 0 && h > 0) ? w * h : 0;
}

double box_iou(const BoundingBox& a, const BoundingBox& b) {
  const long long inter = intersection_area(a, b);
  const long long uni = a.area() + b.area() - inter;
  return uni > 0 ? static_cast<double>(inter) / static_cast<double>(uni) : 0.0;
}

// --- GrayImage -----------------------------------------------------------

GrayImage::GrayImage(int height, int width, std::vector<float> pixels)
    : height_(height), width_(width), pixels_(std::move(pixels)) {
  if (height < 1 || width < 1) throw ImageError("image dimensions must be positive");
  if (pixels_.size() != static_cast<std::size_t>(height) * width) {
    throw ImageError("pixel buffer does not match dimensions");
  }
  for (auto& v : pixels_) {
    v = std::isfinite(v) ? std::clamp(v, 0.0f, 1.0f) : 0.0f;
  }
}

GrayImage::GrayImage(FloatRaster raster)
    : GrayImage(raster.height, raster.width, std::move(raster.data)) {}

GrayImage GrayImage::filled(int height, int width, float value) {
  return GrayImage(height, width, std::vector<float>(static_cast<std::size_t>(height) * width, value));
}

FloatRaster GrayImage::to_raster() const {
  FloatRaster r;
  r.height = height_;
  r.width = width_;
  r.data = pixels_;
  return r;
}

double GrayImage::sum() const {
  return std::accumulate(pixels_.begin(), pixels_.end(), 0.0);
}

double GrayImage::mean() const { return pixels_.empty() ? 0.0 : sum() / pixels_.size(); }

// --- I/O -----------------------------------------------------------------

GrayImage load_image(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw ImageError("no such file: " + path.string());
  const std::string ext = lower_ext(path);
  Bytes8 bytes;
  if (ext == ".pgm") {
    bytes = read_pgm_bytes(path);
  } else if (ext == ".png") {
    bytes = read_png_bytes(path);
  } else {
    throw ImageError("unsupported image format: " + path.string());
  }
  std::vector<float> px(bytes.luma.size());
  std::transform(bytes.luma.begin(), bytes.luma.end(), px.begin(),
                 [](std::uint8_t v) { return static_cast<float>(1.0 - v / 255.0); });
  return GrayImage(bytes.height, bytes.width, std::move(px));
}

void save_png(const GrayImage& img, const std::filesystem::path& path) {
  write_png_bytes(path, img.height(), img.width(), to_paper_bytes(img));
}

void save_pgm(const GrayImage& img, const std::filesystem::path& path) {
  write_pgm_bytes(path, img.height(), img.width(), to_paper_bytes(img));
}

void save_image(const GrayImage& img, const std::filesystem::path& path) {
  const std::string ext = lower_ext(path);
  if (ext == ".png") {
    save_png(img, path);
  } else if (ext == ".pgm") {
    save_pgm(img, path);
  } else {
    throw ImageError("unsupported output format: " + path.string());
  }
}

FloatRaster load_signed_pgm(const std::filesystem::path& path) {
  const Bytes8 bytes = read_pgm_bytes(path);
  FloatRaster r(bytes.height, bytes.width);
  for (std::size_t i = 0; i < r.data.size(); ++i) {
    r.data[i] = (static_cast<float>(bytes.luma[i]) - 128.0f) / 127.0f;
  }
  return r;
}

void save_signed_pgm(const FloatRaster& raster, const std::filesystem::path& path) {
  std::vector<std::uint8_t> bytes(raster.data.size());
  for (std::size_t i = 0; i < bytes.size(); ++i) {
    const double v = std::clamp(static_cast<double>(raster.data[i]), -1.0, 1.0);
    bytes[i] = static_cast<std::uint8_t>(std::lround(128.0 + 127.0 * v));
  }
  write_pgm_bytes(path, raster.height, raster.width, bytes);
}

// --- Histogram -----------------------------------------------------------

int Histogram::bin_of(double v) const {
  const int b = static_cast<int>(std::floor(v * bin_count()));
  return std::clamp(b, 0, bin_count() - 1);
}

double Histogram::pdf(int bin) const {
  return total ? static_cast<double>(bins[bin]) / static_cast<double>(total) : 0.0;
}

double Histogram::cdf(int bin) const {
  if (!total) return 0.0;
  std::uint64_t acc = 0;
  for (int b = 0; b <= bin && b < bin_count(); ++b) acc += bins[b];
  return static_cast<double>(acc) / static_cast<double>(total);
}

int Histogram::quantile_bin(double q) const {
  const double target = std::clamp(q, 0.0, 1.0) * static_cast<double>(total);
  std::uint64_t acc = 0;
  for (int b = 0; b < bin_count(); ++b) {
    acc += bins[b];
    if (static_cast<double>(acc) >= target && acc > 0) return b;
  }
  return bin_count() - 1;
}

double Histogram::quantile(double q) const {
  return static_cast<double>(quantile_bin(q) + 1) / bin_count();
}

double Histogram::mean_between(int first, int last) const {
  std::uint64_t count = 0;
  double sum = 0.0;
  for (int b = std::max(first, 0); b <= last && b < bin_count(); ++b) {
    count += bins[b];
    sum += value_sums[b];
  }
  return count ? sum / static_cast<double>(count) : 0.0;
}

Histogram histogram(const GrayImage& img, int bins) {
  if (bins < 2) throw std::invalid_argument("histogram needs at least 2 bins");
  Histogram h;
  h.bins.assign(bins, 0);
  h.value_sums.assign(bins, 0.0);
  for (float v : img.pixels()) {
    const int b = h.bin_of(v);
    ++h.bins[b];
    h.value_sums[b] += v;
  }
  h.total = img.pixels().size();
  return h;
}

// --- Filters -------------------------------------------------------------

FloatRaster gaussian_blur(const FloatRaster& img, double sigma) {
  if (sigma <= 0) throw std::invalid_argument("blur sigma must be positive");
  const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
  const auto k = gaussian_kernel(sigma, radius);
  return convolve_cols(convolve_rows(img, k), k);
}

FloatRaster log_filter(const FloatRaster& img, double sigma) {
  if (sigma <= 0) throw std::invalid_argument("LoG sigma must be positive");
  if (sigma > std::min(img.height, img.width) / 2.0) {
    throw std::invalid_argument("LoG sigma larger than half the image size");
  }
  const int radius = std::max(1, static_cast<int>(std::ceil(4.0 * sigma)));
  const auto g = gaussian_kernel(sigma, radius);
  std::vector<float> d2(g.size());
  double mean = 0.0;
  const double s2 = sigma * sigma;
  for (int i = -radius; i <= radius; ++i) {
    d2[i + radius] = static_cast<float>((i * i / (s2 * s2) - 1.0 / s2) * g[i + radius]);
    mean += d2[i + radius];
  }
  mean /= static_cast<double>(d2.size());
  for (auto& v : d2) v = static_cast<float>(v - mean);

  const FloatRaster dxx = convolve_cols(convolve_rows(img, d2), g);
  const FloatRaster dyy = convolve_cols(convolve_rows(img, g), d2);
  FloatRaster out(img.height, img.width);
  for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] = dxx.data[i] + dyy.data[i];
  return out;
}

FloatRaster log_filter(const GrayImage& img, double sigma) {
  return log_filter(img.to_raster(), sigma);
}

Pyramid pyramid_reduce(const GrayImage& img, int levels) {
  if (levels < 1) throw std::invalid_argument("pyramid needs at least one level");
  constexpr int kMinSide = 16;
  Pyramid p;
  p.levels.push_back(img);
  while (static_cast<int>(p.levels.size()) < levels) {
    const GrayImage& prev = p.levels.back();
    const int h = prev.height() / 2;
    const int w = prev.width() / 2;
    if (h < kMinSide || w < kMinSide) {
      p.truncated = true;
      spdlog::warn("pyramid truncated at {} levels ({}x{} input)", p.levels.size(),
                   img.height(), img.width());
      break;
    }
    const FloatRaster blurred = gaussian_blur(prev.to_raster(), 1.0);
    FloatRaster next(h, w);
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        next(y, x) = 0.25f * (blurred(2 * y, 2 * x) + blurred(2 * y, 2 * x + 1) +
                              blurred(2 * y + 1, 2 * x) + blurred(2 * y + 1, 2 * x + 1));
      }
    }
    p.levels.emplace_back(std::move(next));
  }
  return p;
}

// --- Geometry ------------------------------------------------------------

GrayImage crop(const GrayImage& img, const BoundingBox& box) {
  if (!box.valid() || box.x0 < 0 || box.y0 < 0 || box.x1 > img.width() ||
      box.y1 > img.height()) {
    throw std::out_of_range("crop box outside image");
  }
  std::vector<float> px;
  px.reserve(static_cast<std::size_t>(box.area()));
  for (int y = box.y0; y < box.y1; ++y) {
    for (int x = box.x0; x < box.x1; ++x) px.push_back(img.at(y, x));
  }
  return GrayImage(box.height(), box.width(), std::move(px));
}

GrayImage resize_to(const GrayImage& img, int height, int width) {
  if (height < 1 || width < 1) throw std::invalid_argument("resize target must be positive");
  if (height == img.height() && width == img.width()) return img;
  const double sy = static_cast<double>(img.height()) / height;
  const double sx = static_cast<double>(img.width()) / width;
  FloatRaster out(height, width);
  for (int y = 0; y < height; ++y) {
    const double src_y = (y + 0.5) * sy - 0.5;
    for (int x = 0; x < width; ++x) {
      out(y, x) = sample_bilinear_clamp(img, (x + 0.5) * sx - 0.5, src_y);
    }
  }
  return GrayImage(std::move(out));
}

GrayImage resize(const GrayImage& img, double scale) {
  if (!(scale >= 0.25 && scale <= 4.0)) throw std::invalid_argument("resize scale outside [0.25, 4]");
  const int h = std::max(1, static_cast<int>(std::lround(img.height() * scale)));
  const int w = std::max(1, static_cast<int>(std::lround(img.width() * scale)));
  if (scale == 1.0) return img;
  FloatRaster out(h, w);
  for (int y = 0; y < h; ++y) {
    const double src_y = (y + 0.5) / scale - 0.5;
    for (int x = 0; x < w; ++x) {
      out(y, x) = sample_bilinear_clamp(img, (x + 0.5) / scale - 0.5, src_y);
    }
  }
  return GrayImage(std::move(out));
}

FloatRaster rotate(const FloatRaster& img, double degrees) {
  const double a = degrees * kPi / 180.0;
  const double c = std::cos(a);
  const double s = std::sin(a);
  const double cx = 0.5 * (img.width - 1);
  const double cy = 0.5 * (img.height - 1);
  FloatRaster out(img.height, img.width);
  for (int y = 0; y < img.height; ++y) {
    const double dy = y - cy;
    for (int x = 0; x < img.width; ++x) {
      const double dx = x - cx;
      out(y, x) = sample_bilinear_zero(img, cx + c * dx + s * dy, cy - s * dx + c * dy);
    }
  }
  return out;
}

GrayImage rotate(const GrayImage& img, double degrees) {
  if (degrees == 0.0) return img;
  return GrayImage(rotate(img.to_raster(), degrees));
}

GrayImage pad_to(const GrayImage& img, int height, int width) {
  FloatRaster out(height, width, 0.0f);
  const int h = std::min(height, img.height());
  const int w = std::min(width, img.width());
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) out(y, x) = img.at(y, x);
  }
  return GrayImage(std::move(out));
}

BoundingBox ink_bounds(const GrayImage& img, float threshold) {
  BoundingBox b{img.width(), img.height(), 0, 0};
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      if (img.at(y, x) >= threshold) {
        b.x0 = std::min(b.x0, x);
        b.y0 = std::min(b.y0, y);
        b.x1 = std::max(b.x1, x + 1);
        b.y1 = std::max(b.y1, y + 1);
      }
    }
  }
  return b.valid() ? b : BoundingBox{};
}

}  // namespace jianpu
