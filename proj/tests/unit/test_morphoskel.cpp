#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "jianpu/morphoskel.hpp"
#include "test_env.hpp"

using namespace jianpu;

namespace {

BinaryImage random_blobs(int h, int w, unsigned seed, int blobs = 6) {
  std::mt19937 rng(seed);
  std::uniform_int_distribution<int> ry(0, h - 1), rx(0, w - 1), rr(2, 7);
  BinaryImage img(h, w);
  for (int b = 0; b < blobs; ++b) {
    const int cy = ry(rng), cx = rx(rng), r = rr(rng), kind = b % 3;
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const int dy = y - cy, dx = x - cx;
        bool on = false;
        if (kind == 0) on = dx * dx + dy * dy <= r * r;
        if (kind == 1) on = std::abs(dy) <= 1 + r / 3 && std::abs(dx) <= 3 * r;
        if (kind == 2) on = std::abs(dx - dy) <= 2 && std::abs(dx) <= 2 * r;
        if (on) img.set(y, x, true);
      }
    }
  }
  return img;
}

BinaryImage complement(const BinaryImage& a) {
  BinaryImage out = a;
  for (auto& b : out.bits) b = b ? 0 : 1;
  return out;
}

bool subset(const BinaryImage& a, const BinaryImage& b) {
  for (std::size_t i = 0; i < a.bits.size(); ++i) {
    if (a.bits[i] && !b.bits[i]) return false;
  }
  return true;
}

BinaryImage from_rows(const std::vector<std::string>& rows) {
  BinaryImage img(static_cast<int>(rows.size()), static_cast<int>(rows[0].size()));
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) img.set(y, x, rows[y][x] == '#');
  }
  return img;
}

}  // namespace

TEST(Binarize, ThresholdIsInclusive) {
  const BinaryImage b = binarize(GrayImage(1, 3, {0.49f, 0.5f, 0.9f}), 0.5);
  EXPECT_FALSE(b.at(0, 0));
  EXPECT_TRUE(b.at(0, 1));
  EXPECT_TRUE(b.at(0, 2));
  EXPECT_EQ(b.count(), 2);
}

TEST(Morphology, DilationErosionDuality) {
  for (unsigned seed = 0; seed < 10; ++seed) {
    const BinaryImage a = random_blobs(48, 64, seed);
    for (int r : {1, 2, 3}) {
      EXPECT_EQ(morph(a, MorphOp::dilate, r), complement(morph(complement(a), MorphOp::erode, r)));
    }
  }
}

TEST(Morphology, OpeningAndClosingAreIdempotentAndOrdered) {
  for (unsigned seed = 0; seed < 10; ++seed) {
    const BinaryImage a = random_blobs(48, 64, seed + 100);
    const BinaryImage o = morph(a, MorphOp::open, 2);
    const BinaryImage c = morph(a, MorphOp::close, 2);
    EXPECT_EQ(morph(o, MorphOp::open, 2), o);
    EXPECT_EQ(morph(c, MorphOp::close, 2), c);
    EXPECT_TRUE(subset(o, a));
    EXPECT_TRUE(subset(a, c));
  }
}

TEST(Morphology, OpeningRemovesThinStrokes) {
  BinaryImage a(20, 30);
  for (int x = 2; x < 28; ++x) a.set(10, x, true);
  EXPECT_EQ(morph(a, MorphOp::open, 1).count(), 0);
  EXPECT_THROW(morph(a, MorphOp::open, 0), std::invalid_argument);
}

TEST(Components, CountsAndConnectivity) {
  const BinaryImage diag = from_rows({"#..", ".#.", "..#"});
  EXPECT_EQ(connected_components(diag, 8).size(), 1u);
  EXPECT_EQ(connected_components(diag, 4).size(), 3u);
  const auto comps = connected_components(from_rows({"##..#", "##..#", "....."}), 8);
  ASSERT_EQ(comps.size(), 2u);
  EXPECT_EQ(comps[0].area, 4);
  EXPECT_EQ(comps[0].box, (BoundingBox{0, 0, 2, 2}));
  EXPECT_EQ(comps[1].box, (BoundingBox{4, 0, 5, 2}));
  EXPECT_THROW(connected_components(diag, 6), std::invalid_argument);
}

TEST(Components, AreasPartitionTheForeground) {
  const BinaryImage a = random_blobs(64, 64, 77, 12);
  long long total = 0;
  for (const auto& c : connected_components(a)) {
    total += c.area;
    EXPECT_EQ(c.area, static_cast<long long>(c.pixels.size()));
    EXPECT_EQ(c.mask.count(), c.area);
  }
  EXPECT_EQ(total, a.count());
}

TEST(Thinning, ProducesOnePixelSkeletonPreservingTopology) {
  for (unsigned seed = 0; seed < 15; ++seed) {
    const BinaryImage a = random_blobs(64, 80, seed + 7);
    const BinaryImage t = zhang_suen_thin(a);
    EXPECT_TRUE(subset(t, a));
    EXPECT_EQ(zhang_suen_thin(t), t);
    EXPECT_EQ(connected_components(t).size(), connected_components(a).size()) << seed;
    for (int y = 0; y + 1 < t.height; ++y) {
      for (int x = 0; x + 1 < t.width; ++x) {
        EXPECT_FALSE(t.at(y, x) && t.at(y + 1, x) && t.at(y, x + 1) && t.at(y + 1, x + 1));
      }
    }
  }
}

TEST(Thinning, ThickBarBecomesALine) {
  BinaryImage a(20, 40);
  for (int y = 8; y < 13; ++y) {
    for (int x = 5; x < 35; ++x) a.set(y, x, true);
  }
  const BinaryImage t = zhang_suen_thin(a);
  const auto comps = connected_components(t);
  ASSERT_EQ(comps.size(), 1u);
  EXPECT_LE(comps[0].box.height(), 2);
  EXPECT_GE(comps[0].box.width(), 20);
}

TEST(SkeletonGraphTest, MAdjacencyAvoidsDoubleLinks) {
  // An L corner: the diagonal between the ends must not be linked.
  const SkeletonGraph g = build_skeleton_graph(from_rows({"#.", "##"}));
  EXPECT_EQ(g.vertices.size(), 3u);
  EXPECT_EQ(g.edge_count(), 2u);
  const SkeletonGraph d = build_skeleton_graph(from_rows({"#..", ".#.", "..#"}));
  EXPECT_EQ(d.edge_count(), 2u);
  EXPECT_EQ(d.components.size(), 1u);
}

TEST(SkeletonGraphTest, ComponentsMatchEightConnectivity) {
  for (unsigned seed = 0; seed < 10; ++seed) {
    const BinaryImage t = zhang_suen_thin(random_blobs(48, 48, seed + 40));
    const SkeletonGraph g = build_skeleton_graph(t);
    EXPECT_EQ(g.components.size(), connected_components(t, 8).size());
    EXPECT_EQ(static_cast<long long>(g.vertices.size()), t.count());
    for (std::size_t v = 0; v < g.vertices.size(); ++v) {
      for (int u : g.adjacency[v]) {
        EXPECT_EQ(g.component_of[u], g.component_of[v]);
        const auto& a = g.vertices[v];
        const auto& b = g.vertices[u];
        EXPECT_LE(std::abs(a.x - b.x), 1);
        EXPECT_LE(std::abs(a.y - b.y), 1);
      }
    }
  }
}

TEST(ChainTest, LongestChainOfAnArc) {
  BinaryImage a(30, 60);
  for (int x = 5; x < 55; ++x) {
    const int y = 20 - static_cast<int>(std::lround(12.0 * std::sin((x - 5) / 50.0 * 3.14159)));
    a.set(y, x, true);
    if (x > 5) {
      const int py = 20 - static_cast<int>(std::lround(12.0 * std::sin((x - 6) / 50.0 * 3.14159)));
      for (int yy = std::min(y, py); yy <= std::max(y, py); ++yy) a.set(yy, x, true);
    }
  }
  const BinaryImage t = zhang_suen_thin(a);
  const SkeletonGraph g = build_skeleton_graph(t);
  ASSERT_EQ(g.components.size(), 1u);
  const Chain c = longest_chain(g, 0);
  const int xmin = std::min(c.points.front().x, c.points.back().x);
  const int xmax = std::max(c.points.front().x, c.points.back().x);
  // Thinning may shave a couple of pixels off each end.
  EXPECT_LE(xmin, 8);
  EXPECT_GE(xmax, 51);
  EXPECT_NEAR(c.length, arc_length(c.points), 1e-12);
  EXPECT_THROW(longest_chain(g, 3), std::out_of_range);
}

TEST(ChainTest, ArcLengthCountsDiagonals) {
  EXPECT_NEAR(arc_length({{0, 0}, {1, 1}, {2, 1}}), std::sqrt(2.0) + 1.0, 1e-12);
  EXPECT_DOUBLE_EQ(arc_length({{3, 3}}), 0.0);
}

TEST(ChainTest, SmoothingKeepsEndpoints) {
  Chain c;
  for (int x = 0; x < 20; ++x) c.points.push_back({x, x % 2});
  const Chain s = smooth_chain(c, 7);
  ASSERT_EQ(s.smoothed.size(), c.points.size());
  EXPECT_EQ(s.smoothed.front(), (PointF{0, 0}));
  EXPECT_EQ(s.smoothed.back(), (PointF{19, 1}));
  EXPECT_NEAR(s.smoothed[10].y, 0.5, 0.1);
  EXPECT_THROW(smooth_chain(c, 4), std::invalid_argument);
}
