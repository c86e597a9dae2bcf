// Tree axis detection in a height-normalized payload: multi-height crops,
// DBSCAN clustering, cylinder candidates scored by the surface fitness
// function, non-maximum suppression, and Voronoi point-to-axis assignment.

#pragma once

#include <array>
#include <optional>
#include <vector>

#include "core/geometry.hpp"
#include "core/reconstruction.hpp"
#include "core/rng.hpp"
#include "core/terrain.hpp"

namespace forestinv {

struct SegmentationConfig {
  std::array<std::array<double, 2>, 3> crop_intervals{{{1.0, 2.0}, {2.5, 3.5}, {4.0, 5.0}}};
  double dbscan_eps = 0.15;
  int dbscan_min_pts = 10;
  double radius_min = 0.03;  // candidate pre-filter
  double radius_max = 1.0;
  double max_tilt_deg = 30.0;
  double suppression_radius = 0.5;
  double reference_height = 1.3;  // axes are compared at this height
  double assign_extra = 1.0;      // max assignment distance = 3 r + this
  double slice_fraction = 0.2;    // top/bottom slice share of the cluster extent
};

struct AxisCandidate {
  Vec3 axis_point = Vec3::Zero();      // a point on the axis
  Vec3 axis_direction = Vec3::UnitZ();  // unit
  double radius = 0.0;
  double fitness = 0.0;  // φ, lower is better
  int support_count = 0;

  /// Point on the axis at height z (direction must not be horizontal).
  Vec3 point_at_height(double z) const {
    const double s = (z - axis_point.z()) / axis_direction.z();
    return axis_point + s * axis_direction;
  }

  double distance_to(const Vec3& p) const {
    return (p - axis_point).cross(axis_direction).norm();
  }
};

/// Cluster of points assigned to one tree axis by one payload.
struct TreeCluster {
  PointCloud cloud;          // sensor frame, stamped
  AxisCandidate axis_map;    // map frame, anchored at the reference height above ground
  AxisCandidate axis_sensor;  // same axis expressed in the sensor frame
  double payload_timestamp = 0.0;
  Vec3 sensor_position = Vec3::Zero();  // map frame
};

struct HeightNormalized {
  PointCloud cloud;                   // z measured above local terrain
  std::vector<double> ground_height;  // per point, for undoing normalization
  size_t dropped_uncovered = 0;
};

/// Subtracts the local DTM height under every point; points over uncovered
/// terrain are dropped and counted.
HeightNormalized height_normalize(const PointCloud& payload_map, const TerrainMesh& dtm);

/// Standard DBSCAN over 3D points. Returns per-cluster index lists; noise
/// points belong to no cluster. Border points attach to their nearest core
/// point, making the partition independent of input order.
std::vector<std::vector<int>> dbscan(const PointCloud& points, double eps, int min_pts);

/// Cylinder candidate from circles fitted to the bottom and top slices of a
/// cluster. Nothing when either slice lacks support or the geometry is
/// degenerate.
std::optional<AxisCandidate> fit_axis_candidate(const PointCloud& cluster,
                                                const SegmentationConfig& seg,
                                                const ReconstructionConfig& reco, Rng& rng);

/// φ = N_{1.2 r} / N_{0.5 r} with N_θ = Σ_i H(d(p_i, axis) - θ), H(0) = 1.
/// Nothing when the denominator is zero.
std::optional<double> eval_fitness(const PointCloud& cluster, const AxisCandidate& axis);

/// Greedy selection in ascending φ; candidates whose axis passes within the
/// suppression radius (x-y at the reference height) of a selected axis are
/// dropped.
std::vector<AxisCandidate> nms_select(std::vector<AxisCandidate> candidates,
                                      double suppression_radius, double reference_height);

/// Per-point nearest-axis assignment (Voronoi paradigm) with a maximum
/// assignment distance of 3 r + assign_extra; ties go to the lower axis
/// index. Returns one index list per axis.
std::vector<std::vector<int>> voronoi_assign(const PointCloud& normalized,
                                             const std::vector<AxisCandidate>& axes,
                                             const SegmentationConfig& seg);

struct SegmentationResult {
  std::vector<TreeCluster> clusters;
  size_t dropped_uncovered = 0;
  int candidates_considered = 0;
};

/// Full per-payload segmentation: normalize, crop at the three height
/// intervals, cluster, fit candidates, NMS, assign, and re-express the
/// clusters in the sensor frame.
SegmentationResult segment_payload(const PointCloud& payload_map, const TerrainMesh& dtm,
                                   const RigidTransform& map_from_sensor, double payload_timestamp,
                                   const SegmentationConfig& seg, const ReconstructionConfig& reco,
                                   uint64_t seed);

}  // namespace forestinv
