#include "core/hull.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace forestinv {

namespace {

struct Face {
  int a, b, c;
  Vec3 normal;   // outward, unit
  double offset;  // plane: normal . x = offset
  bool alive = true;
};

double signed_distance(const Face& f, const Vec3& p) { return f.normal.dot(p) - f.offset; }

Face make_face(const std::vector<Vec3>& pts, int a, int b, int c, const Vec3& interior) {
  Face f{a, b, c, Vec3::Zero(), 0.0, true};
  Vec3 n = (pts[b] - pts[a]).cross(pts[c] - pts[a]);
  const double len = n.norm();
  if (len > 0.0) {
    n /= len;
  }
  f.normal = n;
  f.offset = n.dot(pts[a]);
  if (signed_distance(f, interior) > 0.0) {  // make the normal face outward
    std::swap(f.b, f.c);
    f.normal = -f.normal;
    f.offset = f.normal.dot(pts[f.a]);
  }
  return f;
}

}  // namespace

std::optional<TriMesh> convex_hull_3d(const std::vector<Vec3>& points, double epsilon) {
  const size_t n = points.size();
  if (n < 4) {
    return std::nullopt;
  }

  Vec3 lo = points[0], hi = points[0];
  for (const auto& p : points) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  const double scale = std::max((hi - lo).norm(), 1.0);
  const double eps = epsilon * scale;

  // Initial tetrahedron: two extreme points, the point farthest from their
  // line, then the point farthest from that plane.
  size_t i0 = 0, i1 = 0;
  {
    double best = -1.0;
    // farthest pair among the bbox-extreme candidates
    std::vector<size_t> cand;
    for (int axis = 0; axis < 3; ++axis) {
      size_t mn = 0, mx = 0;
      for (size_t i = 1; i < n; ++i) {
        if (points[i][axis] < points[mn][axis]) {
          mn = i;
        }
        if (points[i][axis] > points[mx][axis]) {
          mx = i;
        }
      }
      cand.push_back(mn);
      cand.push_back(mx);
    }
    for (size_t a : cand) {
      for (size_t b : cand) {
        const double d = (points[a] - points[b]).squaredNorm();
        if (d > best) {
          best = d;
          i0 = a;
          i1 = b;
        }
      }
    }
    if (best <= eps * eps) {
      return std::nullopt;  // all points coincident
    }
  }
  size_t i2 = 0;
  {
    double best = -1.0;
    const Vec3 d = (points[i1] - points[i0]).normalized();
    for (size_t i = 0; i < n; ++i) {
      const Vec3 v = points[i] - points[i0];
      const double dist = (v - d * d.dot(v)).norm();
      if (dist > best) {
        best = dist;
        i2 = i;
      }
    }
    if (best <= eps) {
      return std::nullopt;  // collinear
    }
  }
  size_t i3 = 0;
  {
    double best = -1.0;
    const Vec3 normal = (points[i1] - points[i0]).cross(points[i2] - points[i0]).normalized();
    for (size_t i = 0; i < n; ++i) {
      const double dist = std::abs(normal.dot(points[i] - points[i0]));
      if (dist > best) {
        best = dist;
        i3 = i;
      }
    }
    if (best <= eps) {
      return std::nullopt;  // coplanar
    }
  }

  const Vec3 interior =
      0.25 * (points[i0] + points[i1] + points[i2] + points[i3]);

  std::vector<Face> faces;
  faces.push_back(make_face(points, static_cast<int>(i0), static_cast<int>(i1),
                            static_cast<int>(i2), interior));
  faces.push_back(make_face(points, static_cast<int>(i0), static_cast<int>(i1),
                            static_cast<int>(i3), interior));
  faces.push_back(make_face(points, static_cast<int>(i0), static_cast<int>(i2),
                            static_cast<int>(i3), interior));
  faces.push_back(make_face(points, static_cast<int>(i1), static_cast<int>(i2),
                            static_cast<int>(i3), interior));

  for (size_t p = 0; p < n; ++p) {
    if (p == i0 || p == i1 || p == i2 || p == i3) {
      continue;
    }
    // Faces visible from point p
    std::vector<int> visible;
    for (size_t f = 0; f < faces.size(); ++f) {
      if (faces[f].alive && signed_distance(faces[f], points[p]) > eps) {
        visible.push_back(static_cast<int>(f));
      }
    }
    if (visible.empty()) {
      continue;  // interior or on-hull point
    }
    // Horizon = edges used exactly once among visible faces
    std::map<std::pair<int, int>, int> edge_use;
    for (int f : visible) {
      const Face& face = faces[f];
      const int vs[3] = {face.a, face.b, face.c};
      for (int e = 0; e < 3; ++e) {
        int u = vs[e], v = vs[(e + 1) % 3];
        if (u > v) {
          std::swap(u, v);
        }
        edge_use[{u, v}] += 1;
      }
      faces[f].alive = false;
    }
    for (const auto& [edge, uses] : edge_use) {
      if (uses == 1) {
        faces.push_back(make_face(points, edge.first, edge.second, static_cast<int>(p), interior));
      }
    }
  }

  // Compact the vertex set to hull vertices only.
  std::vector<int> remap(n, -1);
  TriMesh mesh;
  for (const auto& f : faces) {
    if (!f.alive) {
      continue;
    }
    std::array<int, 3> tri{};
    const int vs[3] = {f.a, f.b, f.c};
    for (int e = 0; e < 3; ++e) {
      if (remap[vs[e]] < 0) {
        remap[vs[e]] = static_cast<int>(mesh.vertices.size());
        mesh.vertices.push_back(points[vs[e]]);
      }
      tri[e] = remap[vs[e]];
    }
    mesh.triangles.push_back(tri);
  }
  if (mesh.triangles.size() < 4) {
    return std::nullopt;
  }
  return mesh;
}

}  // namespace forestinv
