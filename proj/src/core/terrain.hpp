// Digital terrain modeling: per-payload local DTMs from cloth simulation
// filtering, and a blended, globally consistent DTM built by casting vertical
// rays against the local meshes.

#pragma once

#include <cstdint>
#include <optional>
#include <unordered_map>
#include <vector>

#include "core/geometry.hpp"
#include "core/hull.hpp"

namespace forestinv {

struct CSFParams {
  double grid_resolution = 0.5;   // cloth particle spacing
  int rigidness = 2;              // constraint passes per iteration
  double gravity_step = 0.065;    // particle fall per iteration
  int max_iterations = 500;
  double class_threshold = 0.1;   // ground classification distance to cloth
  double convergence_delta = 0.005;
};

/// Height-field mesh over a regular x-y grid (one height per node). Local
/// DTMs are emitted in the map frame at build time.
struct TerrainMesh {
  double origin_x = 0.0;  // position of node (0, 0)
  double origin_y = 0.0;
  int nx = 0;  // node count in x
  int ny = 0;
  double grid_resolution = 0.5;
  std::vector<double> heights;  // ny rows of nx, row-major
  Vec3 sensor_position = Vec3::Zero();
  FrameTag frame = FrameTag::map();
  bool converged = true;

  double width() const { return (nx - 1) * grid_resolution; }   // w_DTM
  double length() const { return (ny - 1) * grid_resolution; }  // l_DTM
  double height(int ix, int iy) const { return heights[iy * nx + ix]; }
  Vec3 vertex(int ix, int iy) const {
    return {origin_x + ix * grid_resolution, origin_y + iy * grid_resolution, height(ix, iy)};
  }

  /// Bilinear height lookup; nothing outside the grid extent.
  std::optional<double> height_at(double x, double y) const;

  /// Two triangles per grid cell, consistent winding.
  std::vector<std::array<int, 3>> triangles() const;

  TriMesh to_mesh() const;
};

/// Extracts the ground surface of a map-frame payload cloud. The cloud is
/// inverted and a particle grid is dropped onto it: particles fall under
/// gravity, collide with the inverted points, and are stiffened by
/// `rigidness` neighbor-constraint passes per iteration. Points near the
/// settled cloth are classified as ground and averaged into the node heights.
TerrainMesh cloth_simulation_filter(const PointCloud& payload, const CSFParams& params,
                                    const Vec3& sensor_position);

/// Eq of the confidence weights: 1 - ||x - x_sensor|| / (min(l, w)/2),
/// clamped to [0, 1].
double blend_weight(const Vec3& x, const TerrainMesh& mesh);

/// Map-frame blended terrain on a fixed grid; samples carry a running
/// weighted-average height and the accumulated weight.
struct GlobalDTM {
  struct Sample {
    double height = 0.0;
    double weight = 0.0;
  };

  double grid_resolution = 0.25;
  std::unordered_map<uint64_t, Sample> samples;

  static uint64_t key(int64_t ix, int64_t iy) {
    return (static_cast<uint64_t>(static_cast<uint32_t>(ix)) << 32) |
           static_cast<uint64_t>(static_cast<uint32_t>(iy));
  }
  int64_t coord(double v) const { return static_cast<int64_t>(std::floor(v / grid_resolution)); }

  const Sample* sample_at(int64_t ix, int64_t iy) const {
    auto it = samples.find(key(ix, iy));
    return it == samples.end() ? nullptr : &it->second;
  }

  bool covered(double x, double y) const;
  void clear() { samples.clear(); }
};

struct FusionStats {
  size_t rays_hit = 0;
  size_t degenerate_triangles = 0;
};

/// Casts a vertical ray at every global grid sample inside the local mesh's
/// footprint; on a hit the sample's height takes the weight-running average
/// with the local height. `tf` re-expresses the stored mesh in the map frame
/// (identity unless the pose graph moved since the mesh was built).
FusionStats fuse_local_dtm(GlobalDTM& global, const TerrainMesh& local, const RigidTransform& tf);

/// Bilinear interpolation over the four surrounding covered samples.
/// Throws Coverage when the surrounding samples are missing.
double terrain_height_at(const GlobalDTM& global, double x, double y);

}  // namespace forestinv
