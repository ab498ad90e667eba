#pragma once

#include <functional>
#include <optional>
#include <stdexcept>
#include <vector>

namespace jianpu {

/// Axis-scaled distance d(p,q) = sqrt(((px-qx)/rx)^2 + ((py-qy)/ry)^2).
class EllipticalMetric {
 public:
  EllipticalMetric(double r_x, double r_y);

  [[nodiscard]] double r_x() const { return r_x_; }
  [[nodiscard]] double r_y() const { return r_y_; }
  [[nodiscard]] double s_x() const { return 1.0 / r_x_; }
  [[nodiscard]] double s_y() const { return 1.0 / r_y_; }

  [[nodiscard]] EllipticalMetric scaled(double c) const { return {r_x_ * c, r_y_ * c}; }

 private:
  double r_x_;
  double r_y_;
};

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

struct Aabb {
  double x0 = 0.0;
  double y0 = 0.0;
  double x1 = 0.0;
  double y1 = 0.0;

  [[nodiscard]] bool contains(const Point2& p) const {
    return p.x >= x0 && p.x <= x1 && p.y >= y0 && p.y <= y1;
  }
};

double elliptical_distance(const Point2& p, const Point2& q, const EllipticalMetric& metric);

/// Admissible lower bound of the elliptical distance from p to any point
/// of the box: per-axis clamped gaps, each scaled by 1/r.
double aabb_lower_bound(const Point2& p, const Aabb& box, const EllipticalMetric& metric);

struct IndexedPoint {
  Point2 p;
  int payload = 0;
};

struct Neighbor {
  int payload = 0;
  double distance = 0.0;
  Point2 p;
};

struct QueryStats {
  int nodes_visited = 0;
  int points_tested = 0;
  /// Lower bounds of subtrees skipped after the best distance was known.
  std::vector<double> pruned_bounds;
};

using PayloadFilter = std::function<bool(int payload)>;

class NoCandidateError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Balanced 2-D KD-tree answering nearest / k-nearest / range queries under
/// a metric chosen per query. The tree is immutable after construction.
class SpatialIndex {
 public:
  static constexpr int kLeafSize = 8;

  explicit SpatialIndex(std::vector<IndexedPoint> points);

  [[nodiscard]] std::size_t size() const { return points_.size(); }
  [[nodiscard]] int height() const;
  [[nodiscard]] const std::vector<IndexedPoint>& points() const { return points_; }

  /// Exact arg-min of the elliptical distance among points passing the
  /// filter; ties go to the smallest payload. Throws NoCandidateError when
  /// nothing passes.
  [[nodiscard]] Neighbor nearest(const Point2& p, const EllipticalMetric& metric,
                                 const PayloadFilter& filter = {}, QueryStats* stats = nullptr) const;

  /// k smallest distances, ascending, ties by payload.
  [[nodiscard]] std::vector<Neighbor> k_nearest(const Point2& p, const EllipticalMetric& metric,
                                                int k, const PayloadFilter& filter = {}) const;

  /// Every point with distance <= radius, ascending, ties by payload.
  [[nodiscard]] std::vector<Neighbor> range(const Point2& p, const EllipticalMetric& metric,
                                            double radius, const PayloadFilter& filter = {}) const;

  /// Every node's box must contain all points below it. Used by tests.
  [[nodiscard]] bool boxes_consistent() const;

 private:
  struct Node {
    Aabb box;
    int begin = 0;
    int end = 0;
    int left = -1;
    int right = -1;
    [[nodiscard]] bool leaf() const { return left < 0; }
  };

  int build(int begin, int end, int depth);
  [[nodiscard]] int subtree_height(int node) const;

  std::vector<IndexedPoint> points_;
  std::vector<Node> nodes_;
};

}  // namespace jianpu
