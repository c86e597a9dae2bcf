#include "core/terrain.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace forestinv {

std::optional<double> TerrainMesh::height_at(double x, double y) const {
  if (nx < 2 || ny < 2) {
    return std::nullopt;
  }
  const double gx = (x - origin_x) / grid_resolution;
  const double gy = (y - origin_y) / grid_resolution;
  if (gx < -1e-9 || gy < -1e-9 || gx > nx - 1 + 1e-9 || gy > ny - 1 + 1e-9) {
    return std::nullopt;
  }
  const int ix0 = std::clamp(static_cast<int>(std::floor(gx)), 0, nx - 2);
  const int iy0 = std::clamp(static_cast<int>(std::floor(gy)), 0, ny - 2);
  const double fx = std::clamp(gx - ix0, 0.0, 1.0);
  const double fy = std::clamp(gy - iy0, 0.0, 1.0);
  const double h00 = height(ix0, iy0);
  const double h10 = height(ix0 + 1, iy0);
  const double h01 = height(ix0, iy0 + 1);
  const double h11 = height(ix0 + 1, iy0 + 1);
  return h00 * (1 - fx) * (1 - fy) + h10 * fx * (1 - fy) + h01 * (1 - fx) * fy + h11 * fx * fy;
}

std::vector<std::array<int, 3>> TerrainMesh::triangles() const {
  std::vector<std::array<int, 3>> tris;
  tris.reserve(static_cast<size_t>(std::max(0, (nx - 1) * (ny - 1) * 2)));
  for (int iy = 0; iy + 1 < ny; ++iy) {
    for (int ix = 0; ix + 1 < nx; ++ix) {
      const int v00 = iy * nx + ix;
      const int v10 = iy * nx + ix + 1;
      const int v01 = (iy + 1) * nx + ix;
      const int v11 = (iy + 1) * nx + ix + 1;
      tris.push_back({v00, v10, v11});
      tris.push_back({v00, v11, v01});
    }
  }
  return tris;
}

TriMesh TerrainMesh::to_mesh() const {
  TriMesh mesh;
  mesh.vertices.reserve(static_cast<size_t>(nx) * ny);
  for (int iy = 0; iy < ny; ++iy) {
    for (int ix = 0; ix < nx; ++ix) {
      mesh.vertices.push_back(vertex(ix, iy));
    }
  }
  mesh.triangles = triangles();
  return mesh;
}

TerrainMesh cloth_simulation_filter(const PointCloud& payload, const CSFParams& params,
                                    const Vec3& sensor_position) {
  if (payload.empty()) {
    throw input_error("cloth_simulation_filter: empty payload");
  }
  if (!(params.grid_resolution > 0.0) || params.rigidness < 1) {
    throw invalid_argument_error("cloth_simulation_filter: bad parameters");
  }

  Vec3 lo = payload[0], hi = payload[0];
  for (const auto& p : payload.points) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  const double res = params.grid_resolution;

  TerrainMesh mesh;
  mesh.grid_resolution = res;
  mesh.origin_x = lo.x();
  mesh.origin_y = lo.y();
  mesh.nx = std::max(2, static_cast<int>(std::ceil((hi.x() - lo.x()) / res)) + 1);
  mesh.ny = std::max(2, static_cast<int>(std::ceil((hi.y() - lo.y()) / res)) + 1);
  mesh.sensor_position = sensor_position;
  mesh.frame = payload.frame;

  const int nx = mesh.nx, ny = mesh.ny;
  const auto node_of = [&](const Vec3& p, int& ix, int& iy) {
    ix = std::clamp(static_cast<int>(std::lround((p.x() - mesh.origin_x) / res)), 0, nx - 1);
    iy = std::clamp(static_cast<int>(std::lround((p.y() - mesh.origin_y) / res)), 0, ny - 1);
  };

  // Collision surface in inverted space: the lowest original point near each
  // node becomes the highest inverted obstacle.
  const double kNoHit = -std::numeric_limits<double>::infinity();
  std::vector<double> collision(static_cast<size_t>(nx) * ny, kNoHit);
  for (const auto& p : payload.points) {
    int ix, iy;
    node_of(p, ix, iy);
    collision[iy * nx + ix] = std::max(collision[iy * nx + ix], -p.z());
  }

  double top = kNoHit;
  for (double c : collision) {
    top = std::max(top, c);
  }

  // Cloth relaxation (inverted space: particles fall by decreasing z).
  std::vector<double> cloth(static_cast<size_t>(nx) * ny, top + 1.0);
  std::vector<char> movable(static_cast<size_t>(nx) * ny, 1);
  std::vector<double> next(cloth.size());
  std::vector<double> iter_start(cloth.size());
  bool converged = false;

  const auto clamp_to_collision = [&]() {
    for (size_t i = 0; i < cloth.size(); ++i) {
      if (movable[i] && cloth[i] <= collision[i]) {
        cloth[i] = collision[i];
        movable[i] = 0;
      }
    }
  };

  for (int iter = 0; iter < params.max_iterations && !converged; ++iter) {
    iter_start = cloth;
    // gravity
    for (size_t i = 0; i < cloth.size(); ++i) {
      if (movable[i]) {
        cloth[i] -= params.gravity_step;
      }
    }
    clamp_to_collision();
    // rigidness constraint passes: pull movable particles halfway to the
    // mean of their grid neighbors (Jacobi update)
    for (int pass = 0; pass < params.rigidness; ++pass) {
      next = cloth;
      for (int iy = 0; iy < ny; ++iy) {
        for (int ix = 0; ix < nx; ++ix) {
          const size_t i = static_cast<size_t>(iy) * nx + ix;
          if (!movable[i]) {
            continue;
          }
          double sum = 0.0;
          int count = 0;
          if (ix > 0) {
            sum += cloth[i - 1];
            ++count;
          }
          if (ix + 1 < nx) {
            sum += cloth[i + 1];
            ++count;
          }
          if (iy > 0) {
            sum += cloth[i - nx];
            ++count;
          }
          if (iy + 1 < ny) {
            sum += cloth[i + nx];
            ++count;
          }
          if (count > 0) {
            next[i] = cloth[i] + 0.5 * (sum / count - cloth[i]);
          }
        }
      }
      cloth.swap(next);
      clamp_to_collision();
    }
    double max_disp = 0.0;
    for (size_t i = 0; i < cloth.size(); ++i) {
      max_disp = std::max(max_disp, std::abs(cloth[i] - iter_start[i]));
    }
    converged = max_disp < params.convergence_delta;
  }

  mesh.converged = converged;

  // Ground classification against the settled cloth, then per-node averaging
  // of the classified points. Nodes that collected no ground points keep the
  // bridged cloth height.
  std::vector<double> height_sum(cloth.size(), 0.0);
  std::vector<int> height_count(cloth.size(), 0);
  TerrainMesh cloth_field = mesh;
  cloth_field.heights.resize(cloth.size());
  for (size_t i = 0; i < cloth.size(); ++i) {
    cloth_field.heights[i] = -cloth[i];
  }
  for (const auto& p : payload.points) {
    const auto ch = cloth_field.height_at(p.x(), p.y());
    if (!ch) {
      continue;
    }
    if (std::abs(p.z() - *ch) <= params.class_threshold) {
      int ix, iy;
      node_of(p, ix, iy);
      height_sum[iy * nx + ix] += p.z();
      height_count[iy * nx + ix] += 1;
    }
  }
  mesh.heights.resize(cloth.size());
  for (size_t i = 0; i < cloth.size(); ++i) {
    mesh.heights[i] =
        height_count[i] > 0 ? height_sum[i] / height_count[i] : cloth_field.heights[i];
  }
  return mesh;
}

double blend_weight(const Vec3& x, const TerrainMesh& mesh) {
  const double half_min_extent = 0.5 * std::min(mesh.width(), mesh.length());
  if (!(half_min_extent > 0.0)) {
    return (x - mesh.sensor_position).norm() == 0.0 ? 1.0 : 0.0;
  }
  const double w = 1.0 - (x - mesh.sensor_position).norm() / half_min_extent;
  return std::clamp(w, 0.0, 1.0);
}

bool GlobalDTM::covered(double x, double y) const {
  const double gx = x / grid_resolution;
  const double gy = y / grid_resolution;
  const int64_t ix0 = static_cast<int64_t>(std::floor(gx));
  const int64_t iy0 = static_cast<int64_t>(std::floor(gy));
  const double fx = gx - ix0;
  const double fy = gy - iy0;
  const double bw[4] = {(1 - fx) * (1 - fy), fx * (1 - fy), (1 - fx) * fy, fx * fy};
  const int64_t off[4][2] = {{0, 0}, {1, 0}, {0, 1}, {1, 1}};
  for (int k = 0; k < 4; ++k) {
    if (bw[k] <= 1e-12) {
      continue;
    }
    const Sample* s = sample_at(ix0 + off[k][0], iy0 + off[k][1]);
    if (!s || s->weight <= 0.0) {
      return false;
    }
  }
  return true;
}

FusionStats fuse_local_dtm(GlobalDTM& global, const TerrainMesh& local, const RigidTransform& tf) {
  FusionStats stats;
  if (local.nx < 2 || local.ny < 2) {
    return stats;
  }
  const bool is_identity = tf.approx_equal(RigidTransform::identity(), 1e-15);

  std::vector<Vec3> verts;
  verts.reserve(static_cast<size_t>(local.nx) * local.ny);
  for (int iy = 0; iy < local.ny; ++iy) {
    for (int ix = 0; ix < local.nx; ++ix) {
      const Vec3 v = local.vertex(ix, iy);
      verts.push_back(is_identity ? v : tf.apply(v));
    }
  }
  const Vec3 sensor = is_identity ? local.sensor_position : tf.apply(local.sensor_position);
  const double half_min_extent = 0.5 * std::min(local.width(), local.length());

  const auto tris = local.triangles();

  // 2D bin index over triangles at the global grid resolution.
  const double res = global.grid_resolution;
  Vec3 lo = verts[0], hi = verts[0];
  for (const auto& v : verts) {
    lo = lo.cwiseMin(v);
    hi = hi.cwiseMax(v);
  }
  const int64_t bx0 = static_cast<int64_t>(std::floor(lo.x() / res));
  const int64_t by0 = static_cast<int64_t>(std::floor(lo.y() / res));
  const int64_t bx1 = static_cast<int64_t>(std::floor(hi.x() / res));
  const int64_t by1 = static_cast<int64_t>(std::floor(hi.y() / res));
  const int64_t bnx = bx1 - bx0 + 1;
  const int64_t bny = by1 - by0 + 1;
  std::vector<std::vector<int>> bins(static_cast<size_t>(bnx * bny));
  for (size_t t = 0; t < tris.size(); ++t) {
    const Vec3& a = verts[tris[t][0]];
    const Vec3& b = verts[tris[t][1]];
    const Vec3& c = verts[tris[t][2]];
    const double area2 = std::abs((b.x() - a.x()) * (c.y() - a.y()) -
                                  (c.x() - a.x()) * (b.y() - a.y()));
    if (area2 < 1e-12) {
      ++stats.degenerate_triangles;
      continue;
    }
    const double txlo = std::min({a.x(), b.x(), c.x()});
    const double txhi = std::max({a.x(), b.x(), c.x()});
    const double tylo = std::min({a.y(), b.y(), c.y()});
    const double tyhi = std::max({a.y(), b.y(), c.y()});
    for (int64_t by = static_cast<int64_t>(std::floor(tylo / res)); by <= std::floor(tyhi / res);
         ++by) {
      for (int64_t bx = static_cast<int64_t>(std::floor(txlo / res)); bx <= std::floor(txhi / res);
           ++bx) {
        if (bx < bx0 || bx > bx1 || by < by0 || by > by1) {
          continue;
        }
        bins[static_cast<size_t>((by - by0) * bnx + (bx - bx0))].push_back(static_cast<int>(t));
      }
    }
  }

  // Vertical ray per global sample inside the footprint.
  const int64_t sx0 = static_cast<int64_t>(std::ceil(lo.x() / res - 1e-12));
  const int64_t sy0 = static_cast<int64_t>(std::ceil(lo.y() / res - 1e-12));
  const int64_t sx1 = static_cast<int64_t>(std::floor(hi.x() / res + 1e-12));
  const int64_t sy1 = static_cast<int64_t>(std::floor(hi.y() / res + 1e-12));
  for (int64_t iy = sy0; iy <= sy1; ++iy) {
    for (int64_t ix = sx0; ix <= sx1; ++ix) {
      const double x = ix * res;
      const double y = iy * res;
      const int64_t bx = static_cast<int64_t>(std::floor(x / res));
      const int64_t by = static_cast<int64_t>(std::floor(y / res));
      double hit_z = 0.0;
      bool hit = false;
      // the sample can sit on a bin boundary; check the 4 surrounding bins
      for (int64_t dy = -1; dy <= 0 && !hit; ++dy) {
        for (int64_t dx = -1; dx <= 0 && !hit; ++dx) {
          const int64_t qx = bx + dx, qy = by + dy;
          if (qx < bx0 || qx > bx1 || qy < by0 || qy > by1) {
            continue;
          }
          for (int t : bins[static_cast<size_t>((qy - by0) * bnx + (qx - bx0))]) {
            const Vec3& a = verts[tris[t][0]];
            const Vec3& b = verts[tris[t][1]];
            const Vec3& c = verts[tris[t][2]];
            const double det =
                (b.x() - a.x()) * (c.y() - a.y()) - (c.x() - a.x()) * (b.y() - a.y());
            if (std::abs(det) < 1e-12) {
              continue;
            }
            const double l1 =
                ((x - a.x()) * (c.y() - a.y()) - (c.x() - a.x()) * (y - a.y())) / det;
            const double l2 =
                ((b.x() - a.x()) * (y - a.y()) - (x - a.x()) * (b.y() - a.y())) / det;
            const double l0 = 1.0 - l1 - l2;
            const double eps = -1e-10;
            if (l0 >= eps && l1 >= eps && l2 >= eps) {
              hit_z = l0 * a.z() + l1 * b.z() + l2 * c.z();
              hit = true;
              break;
            }
          }
        }
      }
      if (!hit) {
        continue;
      }
      ++stats.rays_hit;
      const Vec3 hit_point(x, y, hit_z);
      double w = 0.0;
      if (half_min_extent > 0.0) {
        w = std::clamp(1.0 - (hit_point - sensor).norm() / half_min_extent, 0.0, 1.0);
      }
      if (w <= 0.0) {
        continue;
      }
      auto& s = global.samples[GlobalDTM::key(ix, iy)];
      s.height = (s.height * s.weight + hit_z * w) / (s.weight + w);
      s.weight += w;
    }
  }
  return stats;
}

double terrain_height_at(const GlobalDTM& global, double x, double y) {
  const double gx = x / global.grid_resolution;
  const double gy = y / global.grid_resolution;
  const int64_t ix0 = static_cast<int64_t>(std::floor(gx));
  const int64_t iy0 = static_cast<int64_t>(std::floor(gy));
  const double fx = gx - ix0;
  const double fy = gy - iy0;
  const double bw[4] = {(1 - fx) * (1 - fy), fx * (1 - fy), (1 - fx) * fy, fx * fy};
  const int64_t off[4][2] = {{0, 0}, {1, 0}, {0, 1}, {1, 1}};
  double acc = 0.0;
  double wsum = 0.0;
  for (int k = 0; k < 4; ++k) {
    if (bw[k] <= 1e-12) {
      continue;
    }
    const GlobalDTM::Sample* s = global.sample_at(ix0 + off[k][0], iy0 + off[k][1]);
    if (!s || s->weight <= 0.0) {
      throw coverage_error("terrain_height_at: uncovered query (" + std::to_string(x) + ", " +
                           std::to_string(y) + ")");
    }
    acc += bw[k] * s->height;
    wsum += bw[k];
  }
  if (wsum <= 0.0) {
    throw coverage_error("terrain_height_at: degenerate query");
  }
  return acc / wsum;
}

}  // namespace forestinv
