#include "core/segmentation.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>

#include "core/spatial.hpp"

namespace forestinv {

HeightNormalized height_normalize(const PointCloud& payload_map, const TerrainMesh& dtm) {
  if (dtm.nx < 2 || dtm.ny < 2 || dtm.heights.empty()) {
    throw input_error("height_normalize: empty DTM");
  }
  HeightNormalized out;
  out.cloud.frame = payload_map.frame;
  out.cloud.reserve(payload_map.size());
  out.ground_height.reserve(payload_map.size());
  for (const auto& p : payload_map.points) {
    const auto ground = dtm.height_at(p.x(), p.y());
    if (!ground) {
      ++out.dropped_uncovered;
      continue;
    }
    out.cloud.push_back({p.x(), p.y(), p.z() - *ground});
    out.ground_height.push_back(*ground);
  }
  return out;
}

std::vector<std::vector<int>> dbscan(const PointCloud& points, double eps, int min_pts) {
  if (!(eps > 0.0) || min_pts < 1) {
    throw invalid_argument_error("dbscan: eps must be > 0 and min_pts >= 1");
  }
  const size_t n = points.size();
  std::vector<std::vector<int>> clusters;
  if (n == 0) {
    return clusters;
  }
  RadiusGrid grid(points.points, eps);

  // Core points: at least min_pts neighbors within eps (the point included).
  std::vector<char> core(n, 0);
  std::vector<std::vector<int>> neighbors(n);
  for (size_t i = 0; i < n; ++i) {
    grid.query(points[i], neighbors[i]);
    core[i] = static_cast<int>(neighbors[i].size()) >= min_pts ? 1 : 0;
  }

  // Connected components over core points.
  std::vector<int> label(n, -1);
  int next_label = 0;
  for (size_t i = 0; i < n; ++i) {
    if (!core[i] || label[i] >= 0) {
      continue;
    }
    const int cluster_id = next_label++;
    clusters.emplace_back();
    std::deque<int> queue{static_cast<int>(i)};
    label[i] = cluster_id;
    while (!queue.empty()) {
      const int p = queue.front();
      queue.pop_front();
      clusters[cluster_id].push_back(p);
      for (int q : neighbors[p]) {
        if (core[q] && label[q] < 0) {
          label[q] = cluster_id;
          queue.push_back(q);
        }
      }
    }
  }

  // Border points: non-core with a core neighbor; join the nearest core
  // point's cluster so the outcome does not depend on input order.
  for (size_t i = 0; i < n; ++i) {
    if (core[i]) {
      continue;
    }
    int best = -1;
    double best_d2 = std::numeric_limits<double>::infinity();
    for (int q : neighbors[i]) {
      if (!core[q]) {
        continue;
      }
      const double d2 = (points[i] - points[q]).squaredNorm();
      if (d2 < best_d2 - 1e-18 || (std::abs(d2 - best_d2) <= 1e-18 && q < best)) {
        best_d2 = d2;
        best = q;
      }
    }
    if (best >= 0) {
      label[i] = label[best];
      clusters[label[i]].push_back(static_cast<int>(i));
    }
  }

  for (auto& c : clusters) {
    std::sort(c.begin(), c.end());
  }
  return clusters;
}

std::optional<AxisCandidate> fit_axis_candidate(const PointCloud& cluster,
                                                const SegmentationConfig& seg,
                                                const ReconstructionConfig& reco, Rng& rng) {
  if (cluster.size() < 6) {
    return std::nullopt;
  }
  double z_min = std::numeric_limits<double>::infinity();
  double z_max = -std::numeric_limits<double>::infinity();
  for (const auto& p : cluster.points) {
    z_min = std::min(z_min, p.z());
    z_max = std::max(z_max, p.z());
  }
  const double extent = z_max - z_min;
  if (extent < 1e-6) {
    return std::nullopt;  // degenerate (coplanar) cluster
  }
  const double band = seg.slice_fraction * extent;

  Slice2D bottom, top;
  bottom.z_center = z_min + 0.5 * band;
  top.z_center = z_max - 0.5 * band;
  for (const auto& p : cluster.points) {
    if (p.z() <= z_min + band) {
      bottom.points.emplace_back(p.x(), p.y());
    }
    if (p.z() >= z_max - band) {
      top.points.emplace_back(p.x(), p.y());
    }
  }
  if (bottom.points.size() < 3 || top.points.size() < 3) {
    return std::nullopt;
  }

  const auto bottom_fit = rht_fit(bottom, reco, rng, nullptr);
  const auto top_fit = rht_fit(top, reco, rng, nullptr);
  if (!bottom_fit || !top_fit) {
    return std::nullopt;
  }

  const Vec3 c_bottom(bottom_fit->circle.cx, bottom_fit->circle.cy, bottom.z_center);
  const Vec3 c_top(top_fit->circle.cx, top_fit->circle.cy, top.z_center);
  Vec3 direction = c_top - c_bottom;
  if (direction.norm() < 1e-9) {
    return std::nullopt;
  }
  direction.normalize();
  if (direction.z() < 0) {
    direction = -direction;
  }

  AxisCandidate candidate;
  candidate.axis_point = c_bottom;
  candidate.axis_direction = direction;
  candidate.radius = 0.5 * (bottom_fit->circle.radius + top_fit->circle.radius);
  candidate.support_count = static_cast<int>(cluster.size());

  // implausible stems are rejected before NMS
  const double tilt = std::acos(std::clamp(direction.z(), -1.0, 1.0)) * 180.0 / M_PI;
  if (candidate.radius < seg.radius_min || candidate.radius > seg.radius_max ||
      tilt > seg.max_tilt_deg) {
    return std::nullopt;
  }

  const auto fitness = eval_fitness(cluster, candidate);
  if (!fitness) {
    return std::nullopt;
  }
  candidate.fitness = *fitness;
  return candidate;
}

std::optional<double> eval_fitness(const PointCloud& cluster, const AxisCandidate& axis) {
  // Heaviside with H(0) = 1
  const auto heaviside = [](double x) { return x >= 0.0 ? 1.0 : 0.0; };
  double n_far = 0.0;   // N_{1.2 r}
  double n_near = 0.0;  // N_{0.5 r}
  const double theta_far = 1.2 * axis.radius;
  const double theta_near = 0.5 * axis.radius;
  for (const auto& p : cluster.points) {
    const double d = axis.distance_to(p);
    n_far += heaviside(d - theta_far);
    n_near += heaviside(d - theta_near);
  }
  if (n_near <= 0.0) {
    return std::nullopt;
  }
  return n_far / n_near;
}

std::vector<AxisCandidate> nms_select(std::vector<AxisCandidate> candidates,
                                      double suppression_radius, double reference_height) {
  std::sort(candidates.begin(), candidates.end(), [](const AxisCandidate& a,
                                                     const AxisCandidate& b) {
    if (a.fitness != b.fitness) {
      return a.fitness < b.fitness;  // lower φ is better
    }
    return a.support_count > b.support_count;
  });
  std::vector<AxisCandidate> selected;
  for (const auto& c : candidates) {
    const Vec3 pos = c.point_at_height(reference_height);
    bool suppressed = false;
    for (const auto& s : selected) {
      const Vec3 other = s.point_at_height(reference_height);
      if (std::hypot(pos.x() - other.x(), pos.y() - other.y()) <= suppression_radius) {
        suppressed = true;
        break;
      }
    }
    if (!suppressed) {
      selected.push_back(c);
    }
  }
  return selected;
}

std::vector<std::vector<int>> voronoi_assign(const PointCloud& normalized,
                                             const std::vector<AxisCandidate>& axes,
                                             const SegmentationConfig& seg) {
  std::vector<std::vector<int>> assignment(axes.size());
  if (axes.empty()) {
    return assignment;
  }
  for (size_t i = 0; i < normalized.size(); ++i) {
    int best = -1;
    double best_d = std::numeric_limits<double>::infinity();
    for (size_t a = 0; a < axes.size(); ++a) {
      const double d = axes[a].distance_to(normalized[i]);
      if (d < best_d) {  // strict: ties keep the lower index
        best_d = d;
        best = static_cast<int>(a);
      }
    }
    if (best >= 0 && best_d <= 3.0 * axes[best].radius + seg.assign_extra) {
      assignment[best].push_back(static_cast<int>(i));
    }
  }
  return assignment;
}

SegmentationResult segment_payload(const PointCloud& payload_map, const TerrainMesh& dtm,
                                   const RigidTransform& map_from_sensor, double payload_timestamp,
                                   const SegmentationConfig& seg, const ReconstructionConfig& reco,
                                   uint64_t seed) {
  SegmentationResult result;
  const HeightNormalized normalized = height_normalize(payload_map, dtm);
  result.dropped_uncovered = normalized.dropped_uncovered;
  if (normalized.cloud.empty()) {
    return result;
  }

  // candidate axes from the three height crops
  std::vector<AxisCandidate> candidates;
  for (size_t interval = 0; interval < seg.crop_intervals.size(); ++interval) {
    const double lo = seg.crop_intervals[interval][0];
    const double hi = seg.crop_intervals[interval][1];
    PointCloud crop(normalized.cloud.frame);
    for (const auto& p : normalized.cloud.points) {
      if (p.z() >= lo && p.z() < hi) {
        crop.push_back(p);
      }
    }
    if (static_cast<int>(crop.size()) < seg.dbscan_min_pts) {
      continue;
    }
    const auto clusters = dbscan(crop, seg.dbscan_eps, seg.dbscan_min_pts);
    for (size_t ci = 0; ci < clusters.size(); ++ci) {
      PointCloud cluster_cloud(crop.frame);
      cluster_cloud.reserve(clusters[ci].size());
      for (int idx : clusters[ci]) {
        cluster_cloud.push_back(crop[idx]);
      }
      Rng rng(mix_seed(seed, interval, ci));
      if (auto candidate = fit_axis_candidate(cluster_cloud, seg, reco, rng)) {
        candidates.push_back(*candidate);
      }
    }
  }
  result.candidates_considered = static_cast<int>(candidates.size());

  const auto axes = nms_select(std::move(candidates), seg.suppression_radius,
                               seg.reference_height);
  if (axes.empty()) {
    return result;  // open ground: no clusters, not an error
  }

  const auto assignment = voronoi_assign(normalized.cloud, axes, seg);
  const RigidTransform sensor_from_map = map_from_sensor.inverse();

  for (size_t a = 0; a < axes.size(); ++a) {
    if (assignment[a].empty()) {
      continue;
    }
    TreeCluster cluster;
    cluster.payload_timestamp = payload_timestamp;
    cluster.sensor_position = map_from_sensor.translation;

    // undo the height normalization, back to the map frame
    PointCloud map_points(FrameTag::map());
    map_points.reserve(assignment[a].size());
    for (int idx : assignment[a]) {
      const Vec3& p = normalized.cloud[idx];
      map_points.push_back({p.x(), p.y(), p.z() + normalized.ground_height[idx]});
    }

    // axis anchored at the reference height above ground
    AxisCandidate map_axis = axes[a];
    const Vec3 anchor_normalized = axes[a].point_at_height(seg.reference_height);
    const auto ground = dtm.height_at(anchor_normalized.x(), anchor_normalized.y());
    const double ground_z = ground ? *ground : 0.0;
    map_axis.axis_point = anchor_normalized + Vec3(0, 0, ground_z);
    cluster.axis_map = map_axis;

    AxisCandidate sensor_axis = map_axis;
    sensor_axis.axis_point = sensor_from_map.apply(map_axis.axis_point);
    sensor_axis.axis_direction = sensor_from_map.rotate(map_axis.axis_direction);
    cluster.axis_sensor = sensor_axis;

    cluster.cloud = transform_cloud(map_points, sensor_from_map, FrameTag::map(),
                                    FrameTag::sensor(payload_timestamp));
    result.clusters.push_back(std::move(cluster));
  }
  return result;
}

}  // namespace forestinv
