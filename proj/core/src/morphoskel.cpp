#include "jianpu/morphoskel.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <deque>
#include <queue>
#include <stdexcept>

namespace jianpu {

namespace {

std::vector<Pixel> disc_offsets(int radius) {
  std::vector<Pixel> offs;
  for (int dy = -radius; dy <= radius; ++dy) {
    for (int dx = -radius; dx <= radius; ++dx) {
      if (dx * dx + dy * dy <= radius * radius) offs.push_back({dx, dy});
    }
  }
  return offs;
}

BinaryImage dilate(const BinaryImage& img, const std::vector<Pixel>& se) {
  BinaryImage out(img.height, img.width);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      if (!img.at(y, x)) continue;
      for (const auto& o : se) {
        const int yy = y + o.y, xx = x + o.x;
        if (yy >= 0 && xx >= 0 && yy < img.height && xx < img.width) out.set(yy, xx, true);
      }
    }
  }
  return out;
}

BinaryImage erode(const BinaryImage& img, const std::vector<Pixel>& se) {
  BinaryImage out(img.height, img.width);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      if (!img.at(y, x)) continue;
      bool keep = true;
      for (const auto& o : se) {
        const int yy = y + o.y, xx = x + o.x;
        if (yy >= 0 && xx >= 0 && yy < img.height && xx < img.width && !img.at(yy, xx)) {
          keep = false;
          break;
        }
      }
      out.set(y, x, keep);
    }
  }
  return out;
}

// Neighbour order P2..P9: N, NE, E, SE, S, SW, W, NW.
constexpr std::array<int, 8> kNy = {-1, -1, 0, 1, 1, 1, 0, -1};
constexpr std::array<int, 8> kNx = {0, 1, 1, 1, 0, -1, -1, -1};

bool zs_deletable(const BinaryImage& img, int y, int x, int subpass) {
  std::array<int, 8> p{};
  int b = 0;
  for (int k = 0; k < 8; ++k) {
    p[k] = img.get(y + kNy[k], x + kNx[k]) ? 1 : 0;
    b += p[k];
  }
  if (b < 2 || b > 6) return false;
  int a = 0;
  for (int k = 0; k < 8; ++k) a += (p[k] == 0 && p[(k + 1) % 8] == 1);
  if (a != 1) return false;
  const int p2 = p[0], p4 = p[2], p6 = p[4], p8 = p[6];
  if (subpass == 0) return p2 * p4 * p6 == 0 && p4 * p6 * p8 == 0;
  return p2 * p4 * p8 == 0 && p2 * p6 * p8 == 0;
}

}  // namespace

long long BinaryImage::count() const {
  return std::count_if(bits.begin(), bits.end(), [](std::uint8_t b) { return b != 0; });
}

BinaryImage binarize(const GrayImage& img, double threshold) {
  BinaryImage out(img.height(), img.width());
  const auto px = img.pixels();
  for (std::size_t i = 0; i < px.size(); ++i) out.bits[i] = px[i] >= threshold ? 1 : 0;
  return out;
}

BinaryImage morph(const BinaryImage& img, MorphOp op, int se_radius) {
  if (se_radius < 1) throw std::invalid_argument("structuring element radius must be >= 1");
  const auto se = disc_offsets(se_radius);
  switch (op) {
    case MorphOp::dilate:
      return dilate(img, se);
    case MorphOp::erode:
      return erode(img, se);
    case MorphOp::open:
      return dilate(erode(img, se), se);
    case MorphOp::close:
      return erode(dilate(img, se), se);
  }
  return img;
}

std::vector<Component> connected_components(const BinaryImage& img, int connectivity) {
  if (connectivity != 4 && connectivity != 8) throw std::invalid_argument("connectivity must be 4 or 8");
  std::vector<int> label(img.bits.size(), -1);
  std::vector<Component> comps;
  std::vector<Pixel> stack;
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      const std::size_t idx = static_cast<std::size_t>(y) * img.width + x;
      if (!img.bits[idx] || label[idx] >= 0) continue;
      const int id = static_cast<int>(comps.size());
      Component c;
      c.box = {x, y, x + 1, y + 1};
      stack.clear();
      stack.push_back({x, y});
      label[idx] = id;
      while (!stack.empty()) {
        const Pixel p = stack.back();
        stack.pop_back();
        c.pixels.push_back(p);
        c.box.x0 = std::min(c.box.x0, p.x);
        c.box.y0 = std::min(c.box.y0, p.y);
        c.box.x1 = std::max(c.box.x1, p.x + 1);
        c.box.y1 = std::max(c.box.y1, p.y + 1);
        for (int dy = -1; dy <= 1; ++dy) {
          for (int dx = -1; dx <= 1; ++dx) {
            if (dx == 0 && dy == 0) continue;
            if (connectivity == 4 && dx != 0 && dy != 0) continue;
            const int yy = p.y + dy, xx = p.x + dx;
            if (!img.get(yy, xx)) continue;
            const std::size_t j = static_cast<std::size_t>(yy) * img.width + xx;
            if (label[j] >= 0) continue;
            label[j] = id;
            stack.push_back({xx, yy});
          }
        }
      }
      c.area = static_cast<long long>(c.pixels.size());
      std::sort(c.pixels.begin(), c.pixels.end(),
                [](const Pixel& a, const Pixel& b) { return a.y != b.y ? a.y < b.y : a.x < b.x; });
      c.mask = BinaryImage(c.box.height(), c.box.width());
      for (const auto& p : c.pixels) c.mask.set(p.y - c.box.y0, p.x - c.box.x0, true);
      comps.push_back(std::move(c));
    }
  }
  std::stable_sort(comps.begin(), comps.end(), [](const Component& a, const Component& b) {
    return a.box.y0 != b.box.y0 ? a.box.y0 < b.box.y0 : a.box.x0 < b.box.x0;
  });
  return comps;
}

BinaryImage zhang_suen_thin(const BinaryImage& input) {
  BinaryImage img = input;
  std::vector<Pixel> marked;
  bool changed = true;
  while (changed) {
    changed = false;
    for (int subpass = 0; subpass < 2; ++subpass) {
      marked.clear();
      for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
          if (img.at(y, x) && zs_deletable(img, y, x, subpass)) marked.push_back({x, y});
        }
      }
      for (const auto& p : marked) {
        if (zs_deletable(img, p.y, p.x, subpass)) {
          img.set(p.y, p.x, false);
          changed = true;
        }
      }
    }
  }
  return img;
}

std::size_t SkeletonGraph::edge_count() const {
  std::size_t deg = 0;
  for (const auto& a : adjacency) deg += a.size();
  return deg / 2;
}

SkeletonGraph build_skeleton_graph(const BinaryImage& skel) {
  SkeletonGraph g;
  g.height = skel.height;
  g.width = skel.width;
  std::vector<int> id(skel.bits.size(), -1);
  for (int y = 0; y < skel.height; ++y) {
    for (int x = 0; x < skel.width; ++x) {
      if (skel.at(y, x)) {
        id[static_cast<std::size_t>(y) * skel.width + x] = static_cast<int>(g.vertices.size());
        g.vertices.push_back({x, y});
      }
    }
  }
  g.adjacency.assign(g.vertices.size(), {});
  auto vid = [&](int y, int x) {
    return skel.get(y, x) ? id[static_cast<std::size_t>(y) * skel.width + x] : -1;
  };
  for (std::size_t v = 0; v < g.vertices.size(); ++v) {
    const Pixel p = g.vertices[v];
    for (int dy = -1; dy <= 1; ++dy) {
      for (int dx = -1; dx <= 1; ++dx) {
        if (dx == 0 && dy == 0) continue;
        const int u = vid(p.y + dy, p.x + dx);
        if (u < 0) continue;
        if (dx != 0 && dy != 0 && (skel.get(p.y, p.x + dx) || skel.get(p.y + dy, p.x))) continue;
        g.adjacency[v].push_back(u);
      }
    }
  }
  g.component_of.assign(g.vertices.size(), -1);
  for (std::size_t s = 0; s < g.vertices.size(); ++s) {
    if (g.component_of[s] >= 0) continue;
    const int cid = static_cast<int>(g.components.size());
    std::vector<int> members;
    std::deque<int> queue{static_cast<int>(s)};
    g.component_of[s] = cid;
    while (!queue.empty()) {
      const int v = queue.front();
      queue.pop_front();
      members.push_back(v);
      for (int u : g.adjacency[v]) {
        if (g.component_of[u] < 0) {
          g.component_of[u] = cid;
          queue.push_back(u);
        }
      }
    }
    std::sort(members.begin(), members.end());
    g.components.push_back(std::move(members));
  }
  return g;
}

double arc_length(const std::vector<Pixel>& points) {
  double len = 0.0;
  for (std::size_t i = 1; i < points.size(); ++i) {
    len += std::hypot(points[i].x - points[i - 1].x, points[i].y - points[i - 1].y);
  }
  return len;
}

namespace {

// BFS from start; returns the farthest vertex (lowest id on ties) and fills
// parent links.
int bfs_farthest(const SkeletonGraph& g, int start, std::vector<int>& parent,
                 std::vector<int>& dist) {
  parent.assign(g.vertices.size(), -1);
  dist.assign(g.vertices.size(), -1);
  std::deque<int> queue{start};
  dist[start] = 0;
  int far = start;
  while (!queue.empty()) {
    const int v = queue.front();
    queue.pop_front();
    if (dist[v] > dist[far] || (dist[v] == dist[far] && v < far)) far = v;
    for (int u : g.adjacency[v]) {
      if (dist[u] < 0) {
        dist[u] = dist[v] + 1;
        parent[u] = v;
        queue.push_back(u);
      }
    }
  }
  return far;
}

}  // namespace

Chain longest_chain(const SkeletonGraph& graph, int component) {
  if (component < 0 || component >= static_cast<int>(graph.components.size()) ||
      graph.components[component].empty()) {
    throw std::out_of_range("no such skeleton component");
  }
  std::vector<int> parent, dist;
  const int a = bfs_farthest(graph, graph.components[component].front(), parent, dist);
  const int b = bfs_farthest(graph, a, parent, dist);
  Chain chain;
  for (int v = b; v >= 0; v = parent[v]) chain.points.push_back(graph.vertices[v]);
  chain.length = arc_length(chain.points);
  return chain;
}

Chain smooth_chain(const Chain& chain, int window) {
  if (window < 3 || window % 2 == 0) throw std::invalid_argument("smoothing window must be odd and >= 3");
  Chain out = chain;
  const int n = static_cast<int>(chain.points.size());
  out.smoothed.clear();
  out.smoothed.reserve(n);
  if (n < 3) {
    for (const auto& p : chain.points) out.smoothed.push_back({double(p.x), double(p.y)});
    return out;
  }
  const int half_max = window / 2;
  for (int i = 0; i < n; ++i) {
    const int half = std::min({half_max, i, n - 1 - i});
    double sx = 0.0, sy = 0.0;
    for (int k = i - half; k <= i + half; ++k) {
      sx += chain.points[k].x;
      sy += chain.points[k].y;
    }
    const double cnt = 2.0 * half + 1.0;
    out.smoothed.push_back({sx / cnt, sy / cnt});
  }
  return out;
}

}  // namespace jianpu
