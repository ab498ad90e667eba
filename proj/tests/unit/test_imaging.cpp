#include <cmath>
#include <fstream>
#include <random>

#include <gtest/gtest.h>

#include "jianpu/imaging.hpp"
#include "test_env.hpp"

using namespace jianpu;

namespace {

GrayImage random_image(int h, int w, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  std::vector<float> px(static_cast<std::size_t>(h) * w);
  for (auto& v : px) v = u(rng);
  return {h, w, px};
}

}  // namespace

TEST(GrayImage, ClampsOnConstruction) {
  const GrayImage img(1, 3, {-0.5f, 0.25f, 2.0f});
  EXPECT_EQ(img.at(0, 0), 0.0f);
  EXPECT_EQ(img.at(0, 1), 0.25f);
  EXPECT_EQ(img.at(0, 2), 1.0f);
}

TEST(GrayImage, RejectsSizeMismatch) { EXPECT_THROW(GrayImage(2, 2, {0.0f}), ImageError); }

TEST(BoundingBoxOps, IouAndUnion) {
  const BoundingBox a{0, 0, 10, 10}, b{5, 0, 15, 10};
  EXPECT_EQ(intersection_area(a, b), 50);
  EXPECT_DOUBLE_EQ(box_iou(a, b), 50.0 / 150.0);
  EXPECT_EQ(united(a, b), (BoundingBox{0, 0, 15, 10}));
  EXPECT_DOUBLE_EQ(box_iou(a, BoundingBox{20, 20, 30, 30}), 0.0);
  EXPECT_DOUBLE_EQ(box_iou(a, a), 1.0);
}

TEST(ImageIo, PngRoundTripIsExactOn8BitLevels) {
  std::vector<float> px;
  for (int i = 0; i < 256; ++i) px.push_back(1.0f - static_cast<float>(i) / 255.0f);
  const GrayImage img(16, 16, px);
  const auto dir = testkit::scratch_dir("png");
  save_png(img, dir / "a.png");
  save_pgm(img, dir / "a.pgm");
  const GrayImage a = load_image(dir / "a.png");
  const GrayImage b = load_image(dir / "a.pgm");
  for (int y = 0; y < 16; ++y) {
    for (int x = 0; x < 16; ++x) {
      EXPECT_NEAR(a.at(y, x), img.at(y, x), 1e-6);
      EXPECT_EQ(a.at(y, x), b.at(y, x));
    }
  }
}

TEST(ImageIo, MissingAndCorruptFilesThrow) {
  const auto dir = testkit::scratch_dir("badio");
  EXPECT_THROW(load_image(dir / "nope.png"), ImageError);
  std::ofstream(dir / "junk.png") << "not an image";
  EXPECT_THROW(load_image(dir / "junk.png"), ImageError);
}

TEST(ImageIo, SignedPgmKeepsSign) {
  FloatRaster r(1, 3);
  r(0, 0) = -1.0f;
  r(0, 1) = 0.0f;
  r(0, 2) = 1.0f;
  const auto dir = testkit::scratch_dir("signed");
  save_signed_pgm(r, dir / "m.pgm");
  const FloatRaster back = load_signed_pgm(dir / "m.pgm");
  EXPECT_NEAR(back(0, 0), -1.0f, 1e-6);
  EXPECT_NEAR(back(0, 1), 0.0f, 1e-6);
  EXPECT_NEAR(back(0, 2), 1.0f, 1e-6);
}

TEST(HistogramTest, CountsAndQuantiles) {
  std::vector<float> px(100, 0.1f);
  for (int i = 0; i < 10; ++i) px[i] = 0.7f;
  const Histogram h = histogram(GrayImage(10, 10, px));
  EXPECT_EQ(h.total, 100u);
  EXPECT_EQ(h.bins[h.bin_of(0.1)], 90u);
  EXPECT_DOUBLE_EQ(h.cdf(h.bin_of(0.1)), 0.9);
  EXPECT_EQ(h.quantile_bin(0.75), h.bin_of(0.1));
  EXPECT_NEAR(h.mean_between(0, h.bin_of(0.1)), 0.1, 1e-7);
  EXPECT_NEAR(h.mean_between(h.bin_of(0.5), h.bin_count() - 1), 0.7, 1e-7);
}

TEST(LogFilter, ConstantRegionRespondsWithZero) {
  const FloatRaster r = log_filter(GrayImage::filled(40, 40, 0.6f), 1.2);
  for (float v : r.data) EXPECT_NEAR(v, 0.0f, 1e-5);
}

TEST(LogFilter, BrightBlobGivesNegativeCentre) {
  FloatRaster img(31, 31, 0.0f);
  for (int y = 13; y < 18; ++y) {
    for (int x = 13; x < 18; ++x) img(y, x) = 1.0f;
  }
  const FloatRaster r = log_filter(img, 1.2);
  EXPECT_LT(r(15, 15), 0.0f);
}

TEST(GaussianBlur, PreservesMassAwayFromBorders) {
  FloatRaster img(41, 41, 0.0f);
  img(20, 20) = 1.0f;
  const FloatRaster b = gaussian_blur(img, 2.0);
  double sum = 0.0;
  for (float v : b.data) sum += v;
  EXPECT_NEAR(sum, 1.0, 1e-4);
  EXPECT_NEAR(b(20, 19), b(20, 21), 1e-7);
  EXPECT_NEAR(b(19, 20), b(21, 20), 1e-7);
}

TEST(PyramidTest, HalvesUntilMinimumSize) {
  const Pyramid p = pyramid_reduce(GrayImage::filled(64, 64, 0.5f), 3);
  ASSERT_EQ(p.levels.size(), 3u);
  EXPECT_EQ(p.levels[1].height(), 32);
  EXPECT_EQ(p.levels[2].width(), 16);
  EXPECT_FALSE(p.truncated);
  const Pyramid q = pyramid_reduce(GrayImage::filled(40, 40, 0.5f), 4);
  EXPECT_TRUE(q.truncated);
  EXPECT_EQ(q.levels.size(), 2u);
  EXPECT_NEAR(q.levels[1].at(5, 5), 0.5f, 1e-6);
}

TEST(Geometry, CropResizeRotatePad) {
  const GrayImage img = random_image(20, 30, 3);
  const GrayImage c = crop(img, {5, 2, 15, 12});
  EXPECT_EQ(c.width(), 10);
  EXPECT_EQ(c.height(), 10);
  EXPECT_EQ(c.at(0, 0), img.at(2, 5));

  const GrayImage r = resize(img, 0.5);
  EXPECT_EQ(r.height(), 10);
  EXPECT_EQ(r.width(), 15);
  EXPECT_THROW(resize(img, 10.0), std::invalid_argument);
  EXPECT_EQ(resize_to(img, 7, 9).width(), 9);

  EXPECT_EQ(rotate(img, 0.0), img);
  const GrayImage p = pad_to(img, 25, 25);
  EXPECT_EQ(p.height(), 25);
  EXPECT_EQ(p.at(24, 0), 0.0f);
  EXPECT_EQ(p.at(0, 24), img.at(0, 24));
}

TEST(Geometry, RotationRoundTripKeepsInterior) {
  FloatRaster r(61, 61, 0.0f);
  for (int y = 20; y < 41; ++y) {
    for (int x = 20; x < 41; ++x) r(y, x) = 1.0f;
  }
  const GrayImage img(r);
  const GrayImage back = rotate(rotate(img, 3.0), -3.0);
  EXPECT_NEAR(back.at(30, 30), 1.0f, 1e-5);
  EXPECT_NEAR(back.at(5, 5), 0.0f, 1e-5);
}

TEST(InkBoundsTest, FindsInkOrReturnsEmpty) {
  FloatRaster r(10, 10, 0.0f);
  r(3, 4) = 1.0f;
  r(6, 2) = 0.8f;
  EXPECT_EQ(ink_bounds(GrayImage(r), 0.5f), (BoundingBox{2, 3, 5, 7}));
  EXPECT_FALSE(ink_bounds(GrayImage::filled(5, 5, 0.0f), 0.5f).valid());
}
