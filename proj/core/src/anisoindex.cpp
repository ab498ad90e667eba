#include "jianpu/anisoindex.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>

namespace jianpu {

namespace {

bool closer(double da, int pa, double db, int pb) { return da < db || (da == db && pa < pb); }

}  // namespace

EllipticalMetric::EllipticalMetric(double r_x, double r_y) : r_x_(r_x), r_y_(r_y) {
  if (!(r_x > 0.0) || !(r_y > 0.0)) throw std::invalid_argument("elliptical radii must be positive");
}

double elliptical_distance(const Point2& p, const Point2& q, const EllipticalMetric& metric) {
  const double dx = (p.x - q.x) / metric.r_x();
  const double dy = (p.y - q.y) / metric.r_y();
  return std::sqrt(dx * dx + dy * dy);
}

double aabb_lower_bound(const Point2& p, const Aabb& box, const EllipticalMetric& metric) {
  const double dx = std::max({box.x0 - p.x, 0.0, p.x - box.x1});
  const double dy = std::max({box.y0 - p.y, 0.0, p.y - box.y1});
  const double sx = dx / metric.r_x();
  const double sy = dy / metric.r_y();
  return std::sqrt(sx * sx + sy * sy);
}

SpatialIndex::SpatialIndex(std::vector<IndexedPoint> points) : points_(std::move(points)) {
  if (points_.empty()) throw std::invalid_argument("spatial index needs at least one point");
  nodes_.reserve(2 * points_.size() / kLeafSize + 2);
  build(0, static_cast<int>(points_.size()), 0);
}

int SpatialIndex::build(int begin, int end, int depth) {
  const int id = static_cast<int>(nodes_.size());
  nodes_.push_back({});
  Aabb box{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(),
           -std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
  for (int i = begin; i < end; ++i) {
    box.x0 = std::min(box.x0, points_[i].p.x);
    box.y0 = std::min(box.y0, points_[i].p.y);
    box.x1 = std::max(box.x1, points_[i].p.x);
    box.y1 = std::max(box.y1, points_[i].p.y);
  }
  nodes_[id].box = box;
  nodes_[id].begin = begin;
  nodes_[id].end = end;
  if (end - begin <= kLeafSize) return id;

  const bool by_x = depth % 2 == 0;
  std::sort(points_.begin() + begin, points_.begin() + end,
            [by_x](const IndexedPoint& a, const IndexedPoint& b) {
              const double ka = by_x ? a.p.x : a.p.y, kb = by_x ? b.p.x : b.p.y;
              const double sa = by_x ? a.p.y : a.p.x, sb = by_x ? b.p.y : b.p.x;
              if (ka != kb) return ka < kb;
              if (sa != sb) return sa < sb;
              return a.payload < b.payload;
            });
  const int mid = begin + (end - begin) / 2;
  const int left = build(begin, mid, depth + 1);
  const int right = build(mid, end, depth + 1);
  nodes_[id].left = left;
  nodes_[id].right = right;
  return id;
}

int SpatialIndex::subtree_height(int node) const {
  const Node& n = nodes_[node];
  if (n.leaf()) return 1;
  return 1 + std::max(subtree_height(n.left), subtree_height(n.right));
}

int SpatialIndex::height() const { return subtree_height(0); }

bool SpatialIndex::boxes_consistent() const {
  for (const auto& n : nodes_) {
    for (int i = n.begin; i < n.end; ++i) {
      if (!n.box.contains(points_[i].p)) return false;
    }
  }
  return true;
}

Neighbor SpatialIndex::nearest(const Point2& p, const EllipticalMetric& metric,
                               const PayloadFilter& filter, QueryStats* stats) const {
  using Entry = std::pair<double, int>;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> open;
  open.push({aabb_lower_bound(p, nodes_[0].box, metric), 0});
  Neighbor best{-1, std::numeric_limits<double>::infinity(), {}};
  bool found = false;

  while (!open.empty()) {
    const auto [bound, id] = open.top();
    open.pop();
    if (found && bound > best.distance) {
      if (stats) {
        stats->pruned_bounds.push_back(bound);
        while (!open.empty()) {
          stats->pruned_bounds.push_back(open.top().first);
          open.pop();
        }
      }
      break;
    }
    const Node& n = nodes_[id];
    if (stats) ++stats->nodes_visited;
    if (n.leaf()) {
      for (int i = n.begin; i < n.end; ++i) {
        const auto& ip = points_[i];
        if (filter && !filter(ip.payload)) continue;
        if (stats) ++stats->points_tested;
        const double d = elliptical_distance(p, ip.p, metric);
        if (!found || closer(d, ip.payload, best.distance, best.payload)) {
          best = {ip.payload, d, ip.p};
          found = true;
        }
      }
    } else {
      for (int child : {n.left, n.right}) {
        const double lb = aabb_lower_bound(p, nodes_[child].box, metric);
        if (found && lb > best.distance) {
          if (stats) stats->pruned_bounds.push_back(lb);
          continue;
        }
        open.push({lb, child});
      }
    }
  }
  if (!found) throw NoCandidateError("no indexed point passes the filter");
  return best;
}

std::vector<Neighbor> SpatialIndex::k_nearest(const Point2& p, const EllipticalMetric& metric,
                                              int k, const PayloadFilter& filter) const {
  if (k < 1) throw std::invalid_argument("k must be >= 1");
  auto worse = [](const Neighbor& a, const Neighbor& b) {
    return closer(a.distance, a.payload, b.distance, b.payload);
  };
  // Max-heap on (distance, payload): top is the current k-th best.
  std::priority_queue<Neighbor, std::vector<Neighbor>, decltype(worse)> best(worse);
  using Entry = std::pair<double, int>;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> open;
  open.push({aabb_lower_bound(p, nodes_[0].box, metric), 0});
  while (!open.empty()) {
    const auto [bound, id] = open.top();
    open.pop();
    if (static_cast<int>(best.size()) == k && bound > best.top().distance) break;
    const Node& n = nodes_[id];
    if (n.leaf()) {
      for (int i = n.begin; i < n.end; ++i) {
        const auto& ip = points_[i];
        if (filter && !filter(ip.payload)) continue;
        const Neighbor cand{ip.payload, elliptical_distance(p, ip.p, metric), ip.p};
        if (static_cast<int>(best.size()) < k) {
          best.push(cand);
        } else if (worse(cand, best.top())) {
          best.pop();
          best.push(cand);
        }
      }
    } else {
      for (int child : {n.left, n.right}) {
        const double lb = aabb_lower_bound(p, nodes_[child].box, metric);
        if (static_cast<int>(best.size()) == k && lb > best.top().distance) continue;
        open.push({lb, child});
      }
    }
  }
  std::vector<Neighbor> out;
  out.reserve(best.size());
  while (!best.empty()) {
    out.push_back(best.top());
    best.pop();
  }
  std::reverse(out.begin(), out.end());
  return out;
}

std::vector<Neighbor> SpatialIndex::range(const Point2& p, const EllipticalMetric& metric,
                                          double radius, const PayloadFilter& filter) const {
  if (!(radius > 0.0)) throw std::invalid_argument("range radius must be positive");
  std::vector<Neighbor> out;
  std::vector<int> stack{0};
  while (!stack.empty()) {
    const int id = stack.back();
    stack.pop_back();
    const Node& n = nodes_[id];
    if (aabb_lower_bound(p, n.box, metric) > radius) continue;
    if (n.leaf()) {
      for (int i = n.begin; i < n.end; ++i) {
        const auto& ip = points_[i];
        if (filter && !filter(ip.payload)) continue;
        const double d = elliptical_distance(p, ip.p, metric);
        if (d <= radius) out.push_back({ip.payload, d, ip.p});
      }
    } else {
      stack.push_back(n.right);
      stack.push_back(n.left);
    }
  }
  std::sort(out.begin(), out.end(), [](const Neighbor& a, const Neighbor& b) {
    return closer(a.distance, a.payload, b.distance, b.payload);
  });
  return out;
}

}  // namespace jianpu
