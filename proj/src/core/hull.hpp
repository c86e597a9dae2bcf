#pragma once

#include <array>
#include <optional>
#include <vector>

#include "core/geometry.hpp"

namespace forestinv {

struct TriMesh {
  std::vector<Vec3> vertices;
  std::vector<std::array<int, 3>> triangles;

  bool empty() const { return triangles.empty(); }
};

/// 3D convex hull by incremental insertion. Returns nothing for fewer than
/// four points or (near-)coplanar input. Hull vertices keep their input
/// coordinates; interior points are dropped.
std::optional<TriMesh> convex_hull_3d(const std::vector<Vec3>& points, double epsilon = 1e-9);

}  // namespace forestinv
