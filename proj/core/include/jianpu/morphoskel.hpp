#pragma once

#include <cstdint>
#include <vector>

#include "jianpu/imaging.hpp"

namespace jianpu {

struct Pixel {
  int x = 0;
  int y = 0;
  friend bool operator==(const Pixel&, const Pixel&) = default;
};

struct PointF {
  double x = 0.0;
  double y = 0.0;
  friend bool operator==(const PointF&, const PointF&) = default;
};

struct BinaryImage {
  int height = 0;
  int width = 0;
  std::vector<std::uint8_t> bits;

  BinaryImage() = default;
  BinaryImage(int h, int w) : height(h), width(w), bits(static_cast<std::size_t>(h) * w, 0) {}

  [[nodiscard]] bool at(int y, int x) const {
    return bits[static_cast<std::size_t>(y) * width + x] != 0;
  }
  [[nodiscard]] bool get(int y, int x) const {
    return y >= 0 && x >= 0 && y < height && x < width && at(y, x);
  }
  void set(int y, int x, bool v) { bits[static_cast<std::size_t>(y) * width + x] = v ? 1 : 0; }
  [[nodiscard]] long long count() const;

  friend bool operator==(const BinaryImage&, const BinaryImage&) = default;
};

/// Pixels >= threshold become foreground.
BinaryImage binarize(const GrayImage& img, double threshold);

enum class MorphOp { dilate, erode, open, close };

/// Disc structuring element of the given radius. Erosion treats pixels
/// outside the frame as foreground and dilation as background, so
/// opening is anti-extensive and closing extensive right up to the border.
BinaryImage morph(const BinaryImage& img, MorphOp op, int se_radius);

struct Component {
  BoundingBox box;
  long long area = 0;
  BinaryImage mask;  // box-local
  std::vector<Pixel> pixels;
};

/// Foreground partition, sorted by (y0, x0) of each component's box.
std::vector<Component> connected_components(const BinaryImage& img, int connectivity = 8);

/// Zhang-Suen two-subpass thinning to a fixpoint. Pixels marked in a
/// subpass are removed in raster order and re-checked against the current
/// image first, so parallel deletion never erases a 2x2 block or splits a
/// component.
BinaryImage zhang_suen_thin(const BinaryImage& img);

struct SkeletonGraph {
  int height = 0;
  int width = 0;
  std::vector<Pixel> vertices;
  std::vector<std::vector<int>> adjacency;
  std::vector<int> component_of;               // per vertex
  std::vector<std::vector<int>> components;    // vertex ids, ascending

  [[nodiscard]] std::size_t edge_count() const;
};

/// M-adjacency: 4-neighbours always connect; a diagonal pair connects only
/// when both shared 4-neighbours are background.
SkeletonGraph build_skeleton_graph(const BinaryImage& skel);

struct Chain {
  std::vector<Pixel> points;
  double length = 0.0;            // Euclidean arc length
  std::vector<PointF> smoothed;   // empty until smooth_chain
};

double arc_length(const std::vector<Pixel>& points);

/// Longest hop path of one component by double BFS (exact on trees).
Chain longest_chain(const SkeletonGraph& graph, int component);

/// Moving average whose window shrinks towards the ends; endpoints are
/// kept exactly. Chains shorter than 3 points are copied unchanged.
Chain smooth_chain(const Chain& chain, int window = 7);

}  // namespace jianpu
