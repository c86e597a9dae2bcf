// Spatial indices: a uniform hash grid for fixed-radius neighbor queries and
// a point octree used for vote aggregation in Hough space.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <unordered_map>
#include <vector>

#include "core/geometry.hpp"

namespace forestinv {

struct GridCellKey {
  int64_t x, y, z;
  bool operator==(const GridCellKey& o) const { return x == o.x && y == o.y && z == o.z; }
};

struct GridCellHash {
  size_t operator()(const GridCellKey& k) const {
    uint64_t h = 1469598103934665603ULL;
    for (uint64_t v :
         {static_cast<uint64_t>(k.x), static_cast<uint64_t>(k.y), static_cast<uint64_t>(k.z)}) {
      h ^= v;
      h *= 1099511628211ULL;
    }
    return static_cast<size_t>(h);
  }
};

/// Hash grid over 3D points with cell size = query radius. Neighbor queries
/// scan the 27 surrounding cells.
class RadiusGrid {
 public:
  RadiusGrid(const std::vector<Vec3>& points, double radius)
      : points_(points), radius_(radius), inv_cell_(1.0 / radius) {
    cells_.reserve(points.size());
    for (size_t i = 0; i < points.size(); ++i) {
      cells_[key(points[i])].push_back(static_cast<int>(i));
    }
  }

  /// Indices of points within `radius_` of `q` (inclusive), ascending.
  void query(const Vec3& q, std::vector<int>& out) const {
    out.clear();
    const double r2 = radius_ * radius_;
    const int64_t cx = coord(q.x());
    const int64_t cy = coord(q.y());
    const int64_t cz = coord(q.z());
    for (int64_t dx = -1; dx <= 1; ++dx) {
      for (int64_t dy = -1; dy <= 1; ++dy) {
        for (int64_t dz = -1; dz <= 1; ++dz) {
          auto it = cells_.find({cx + dx, cy + dy, cz + dz});
          if (it == cells_.end()) {
            continue;
          }
          for (int idx : it->second) {
            if ((points_[idx] - q).squaredNorm() <= r2) {
              out.push_back(idx);
            }
          }
        }
      }
    }
    std::sort(out.begin(), out.end());
  }

  size_t count(const Vec3& q) const {
    size_t n = 0;
    const double r2 = radius_ * radius_;
    const int64_t cx = coord(q.x());
    const int64_t cy = coord(q.y());
    const int64_t cz = coord(q.z());
    for (int64_t dx = -1; dx <= 1; ++dx) {
      for (int64_t dy = -1; dy <= 1; ++dy) {
        for (int64_t dz = -1; dz <= 1; ++dz) {
          auto it = cells_.find({cx + dx, cy + dy, cz + dz});
          if (it == cells_.end()) {
            continue;
          }
          for (int idx : it->second) {
            if ((points_[idx] - q).squaredNorm() <= r2) {
              ++n;
            }
          }
        }
      }
    }
    return n;
  }

 private:
  int64_t coord(double v) const { return static_cast<int64_t>(std::floor(v * inv_cell_)); }
  GridCellKey key(const Vec3& p) const { return {coord(p.x()), coord(p.y()), coord(p.z())}; }

  const std::vector<Vec3>& points_;
  double radius_;
  double inv_cell_;
  std::unordered_map<GridCellKey, std::vector<int>, GridCellHash> cells_;
};

/// Region octree over a fixed point set; supports radius counting and
/// gathering. Built once, queried many times.
class Octree {
 public:
  explicit Octree(const std::vector<Vec3>& points, int leaf_capacity = 16, int max_depth = 16)
      : points_(points), leaf_capacity_(leaf_capacity), max_depth_(max_depth) {
    if (points.empty()) {
      return;
    }
    Vec3 lo = points.front(), hi = points.front();
    for (const auto& p : points) {
      lo = lo.cwiseMin(p);
      hi = hi.cwiseMax(p);
    }
    const Vec3 center = 0.5 * (lo + hi);
    const double half = std::max((hi - lo).maxCoeff() * 0.5, 1e-12) * 1.0000001;
    std::vector<int> all(points.size());
    for (size_t i = 0; i < points.size(); ++i) {
      all[i] = static_cast<int>(i);
    }
    root_ = build(center, half, std::move(all), 0);
  }

  /// Number of points with ||p - q|| <= radius.
  size_t radius_count(const Vec3& q, double radius) const {
    if (root_ < 0) {
      return 0;
    }
    size_t n = 0;
    count_recursive(root_, q, radius, radius * radius, n);
    return n;
  }

  /// Indices of points with ||p - q|| <= radius (ascending).
  std::vector<int> radius_query(const Vec3& q, double radius) const {
    std::vector<int> out;
    if (root_ >= 0) {
      gather_recursive(root_, q, radius, radius * radius, out);
      std::sort(out.begin(), out.end());
    }
    return out;
  }

 private:
  struct Node {
    Vec3 center;
    double half;
    int children[8];  // -1 when absent
    std::vector<int> indices;  // leaf payload
    bool leaf = true;
  };

  int build(const Vec3& center, double half, std::vector<int> idx, int depth) {
    Node node;
    node.center = center;
    node.half = half;
    std::fill(std::begin(node.children), std::end(node.children), -1);
    if (static_cast<int>(idx.size()) <= leaf_capacity_ || depth >= max_depth_) {
      node.indices = std::move(idx);
      nodes_.push_back(std::move(node));
      return static_cast<int>(nodes_.size()) - 1;
    }
    node.leaf = false;
    std::vector<int> buckets[8];
    for (int i : idx) {
      const Vec3& p = points_[i];
      const int oct = (p.x() >= center.x() ? 1 : 0) | (p.y() >= center.y() ? 2 : 0) |
                      (p.z() >= center.z() ? 4 : 0);
      buckets[oct].push_back(i);
    }
    const int self = static_cast<int>(nodes_.size());
    nodes_.push_back(std::move(node));
    const double h = half * 0.5;
    for (int oct = 0; oct < 8; ++oct) {
      if (buckets[oct].empty()) {
        continue;
      }
      const Vec3 child_center(center.x() + (oct & 1 ? h : -h), center.y() + (oct & 2 ? h : -h),
                              center.z() + (oct & 4 ? h : -h));
      const int child = build(child_center, h, std::move(buckets[oct]), depth + 1);
      nodes_[self].children[oct] = child;
    }
    return self;
  }

  bool sphere_intersects(const Node& node, const Vec3& q, double radius) const {
    double d2 = 0.0;
    for (int a = 0; a < 3; ++a) {
      const double lo = node.center[a] - node.half;
      const double hi = node.center[a] + node.half;
      if (q[a] < lo) {
        d2 += (lo - q[a]) * (lo - q[a]);
      } else if (q[a] > hi) {
        d2 += (q[a] - hi) * (q[a] - hi);
      }
    }
    return d2 <= radius * radius;
  }

  void count_recursive(int node_idx, const Vec3& q, double radius, double r2, size_t& n) const {
    const Node& node = nodes_[node_idx];
    if (!sphere_intersects(node, q, radius)) {
      return;
    }
    if (node.leaf) {
      for (int i : node.indices) {
        if ((points_[i] - q).squaredNorm() <= r2) {
          ++n;
        }
      }
      return;
    }
    for (int c : node.children) {
      if (c >= 0) {
        count_recursive(c, q, radius, r2, n);
      }
    }
  }

  void gather_recursive(int node_idx, const Vec3& q, double radius, double r2,
                        std::vector<int>& out) const {
    const Node& node = nodes_[node_idx];
    if (!sphere_intersects(node, q, radius)) {
      return;
    }
    if (node.leaf) {
      for (int i : node.indices) {
        if ((points_[i] - q).squaredNorm() <= r2) {
          out.push_back(i);
        }
      }
      return;
    }
    for (int c : node.children) {
      if (c >= 0) {
        gather_recursive(c, q, radius, r2, out);
      }
    }
  }

  const std::vector<Vec3>& points_;
  int leaf_capacity_;
  int max_depth_;
  std::vector<Node> nodes_;
  int root_ = -1;
};

}  // namespace forestinv
