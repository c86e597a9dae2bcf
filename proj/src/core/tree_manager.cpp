#include "core/tree_manager.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>

#include "core/rng.hpp"

namespace forestinv {

namespace {

double wrap_angle(double a) {
  while (a < 0.0) {
    a += 2.0 * M_PI;
  }
  while (a >= 2.0 * M_PI) {
    a -= 2.0 * M_PI;
  }
  return a;
}

}  // namespace

double coverage_angle(const std::vector<std::pair<double, double>>& bearings) {
  if (bearings.empty()) {
    return 0.0;
  }
  // collect [start, end] intervals on [0, 2π), splitting wrap-arounds
  std::vector<std::pair<double, double>> intervals;
  intervals.reserve(bearings.size() * 2);
  for (const auto& [bearing, delta] : bearings) {
    if (delta >= M_PI) {
      return 2.0 * M_PI;
    }
    const double lo = wrap_angle(bearing - delta);
    const double hi = wrap_angle(bearing + delta);
    if (lo <= hi) {
      intervals.emplace_back(lo, hi);
    } else {
      intervals.emplace_back(lo, 2.0 * M_PI);
      intervals.emplace_back(0.0, hi);
    }
  }
  std::sort(intervals.begin(), intervals.end());
  double total = 0.0;
  double cur_lo = intervals[0].first;
  double cur_hi = intervals[0].second;
  for (size_t i = 1; i < intervals.size(); ++i) {
    if (intervals[i].first <= cur_hi) {
      cur_hi = std::max(cur_hi, intervals[i].second);
    } else {
      total += cur_hi - cur_lo;
      cur_lo = intervals[i].first;
      cur_hi = intervals[i].second;
    }
  }
  total += cur_hi - cur_lo;
  return std::min(total, 2.0 * M_PI);
}

uint64_t TreeInstance::fingerprint() const {
  uint64_t h = mix_seed(static_cast<uint64_t>(id), clusters.size());
  for (const auto& c : clusters) {
    uint64_t bits;
    static_assert(sizeof(double) == sizeof(uint64_t));
    std::memcpy(&bits, &c.data.payload_timestamp, sizeof(bits));
    h = mix_seed(h, bits);
    // fold in the cached pose so realignment marks the instance changed
    double tx = c.map_tf.translation.x() + 3.0 * c.map_tf.translation.y() +
                7.0 * c.map_tf.translation.z() + c.map_tf.rotation.w();
    std::memcpy(&bits, &tx, sizeof(bits));
    h = mix_seed(h, bits);
  }
  return h;
}

double TreeInstance::max_point_z() const {
  double max_z = -std::numeric_limits<double>::infinity();
  for (const auto& c : clusters) {
    const Eigen::Matrix3d R = c.map_tf.rotation.toRotationMatrix();
    for (const auto& p : c.data.cloud.points) {
      max_z = std::max(max_z, (R * p + c.map_tf.translation).z());
    }
  }
  return max_z;
}

std::vector<MapCluster> TreeInstance::map_clusters() const {
  std::vector<MapCluster> out;
  out.reserve(clusters.size());
  for (const auto& c : clusters) {
    MapCluster mc;
    mc.cloud = transform_cloud(c.data.cloud, c.map_tf,
                               FrameTag::sensor(c.data.payload_timestamp), FrameTag::map());
    mc.sensor_position = c.sensor_position;
    out.push_back(std::move(mc));
  }
  return out;
}

void TreeManager::derive_map_state(StoredCluster& cluster) const {
  cluster.axis_map.axis_point = cluster.map_tf.apply(cluster.data.axis_sensor.axis_point);
  cluster.axis_map.axis_direction =
      cluster.map_tf.rotate(cluster.data.axis_sensor.axis_direction);
  cluster.axis_map.radius = cluster.data.axis_sensor.radius;
  cluster.axis_map.fitness = cluster.data.axis_sensor.fitness;
  cluster.axis_map.support_count = cluster.data.axis_sensor.support_count;
  cluster.sensor_position = cluster.map_tf.translation;
  cluster.sensor_distance = std::hypot(cluster.sensor_position.x() - cluster.axis_map.axis_point.x(),
                                       cluster.sensor_position.y() - cluster.axis_map.axis_point.y());
  cluster.bearing = std::atan2(cluster.sensor_position.y() - cluster.axis_map.axis_point.y(),
                               cluster.sensor_position.x() - cluster.axis_map.axis_point.x());
}

void TreeManager::refit_axis(TreeInstance& instance) const {
  if (instance.clusters.empty()) {
    return;
  }
  double wsum = 0.0;
  Vec3 point = Vec3::Zero();
  Vec3 direction = Vec3::Zero();
  double radius = 0.0;
  for (const auto& c : instance.clusters) {
    const double w = std::max(1, c.axis_map.support_count);
    point += w * c.axis_map.axis_point;
    direction += w * c.axis_map.axis_direction;
    radius += w * c.axis_map.radius;
    wsum += w;
  }
  instance.map_axis.axis_point = point / wsum;
  instance.map_axis.axis_direction =
      direction.norm() > 1e-12 ? Vec3(direction.normalized()) : Vec3::UnitZ();
  instance.map_axis.radius = radius / wsum;
  instance.map_axis.support_count = 0;
  double best_fitness = std::numeric_limits<double>::infinity();
  for (const auto& c : instance.clusters) {
    instance.map_axis.support_count += c.axis_map.support_count;
    best_fitness = std::min(best_fitness, c.axis_map.fitness);
  }
  instance.map_axis.fitness = best_fitness;
}

void TreeManager::recompute_coverage(TreeInstance& instance) const {
  CoverageState coverage;
  std::vector<std::pair<double, double>> bearings;
  bearings.reserve(instance.clusters.size());
  for (const auto& c : instance.clusters) {
    coverage.max_sensor_distance = std::max(coverage.max_sensor_distance, c.sensor_distance);
    coverage.observation_count += 1;
    const double delta = std::atan2(std::max(c.axis_map.radius, 1e-6),
                                    std::max(c.sensor_distance, 1e-6)) +
                         cfg_.aperture_extra_deg * M_PI / 180.0;
    bearings.emplace_back(c.bearing, delta);
  }
  coverage.coverage_angle = coverage_angle(bearings);
  instance.coverage = coverage;
}

int TreeManager::associate_cluster(const TreeCluster& cluster, const RigidTransform& map_tf) {
  StoredCluster stored;
  stored.data = cluster;
  stored.map_tf = map_tf;
  derive_map_state(stored);

  int best_id = -1;
  double best_dist = cfg_.association_distance;
  for (const auto& [id, instance] : instances_) {
    const double d = std::hypot(instance.map_axis.axis_point.x() - stored.axis_map.axis_point.x(),
                                instance.map_axis.axis_point.y() - stored.axis_map.axis_point.y());
    if (d <= best_dist) {
      best_dist = d;
      best_id = id;
    }
  }
  if (best_id < 0) {
    best_id = next_id_++;
    TreeInstance instance;
    instance.id = best_id;
    instance.map_axis = stored.axis_map;
    instances_.emplace(best_id, std::move(instance));
  }
  TreeInstance& instance = instances_.at(best_id);
  instance.clusters.push_back(std::move(stored));
  instance.dirty = true;
  refit_axis(instance);
  recompute_coverage(instance);
  return best_id;
}

size_t TreeManager::realign_all(const PoseGraphSnapshot& snapshot) {
  size_t moved = 0;
  for (auto& [id, instance] : instances_) {
    bool instance_moved = false;
    for (auto& cluster : instance.clusters) {
      const RigidTransform* tf = snapshot.find(cluster.data.payload_timestamp);
      if (!tf) {
        cluster.stale = true;
        continue;
      }
      cluster.stale = false;
      if (tf->approx_equal(cluster.map_tf, 1e-12)) {
        continue;
      }
      cluster.map_tf = *tf;
      derive_map_state(cluster);
      ++moved;
      instance_moved = true;
    }
    if (instance_moved) {
      refit_axis(instance);
      recompute_coverage(instance);
      instance.dirty = true;
    }
    instance.pose_revision = snapshot.revision;
  }
  merge_collapsed_instances();
  return moved;
}

size_t TreeManager::merge_collapsed_instances() {
  size_t merges = 0;
  bool changed = true;
  while (changed) {
    changed = false;
    for (auto it = instances_.begin(); it != instances_.end() && !changed; ++it) {
      auto jt = it;
      for (++jt; jt != instances_.end(); ++jt) {
        const double d =
            std::hypot(it->second.map_axis.axis_point.x() - jt->second.map_axis.axis_point.x(),
                       it->second.map_axis.axis_point.y() - jt->second.map_axis.axis_point.y());
        if (d <= cfg_.association_distance) {
          // lowest id survives with the union of clusters
          for (auto& c : jt->second.clusters) {
            it->second.clusters.push_back(std::move(c));
          }
          refit_axis(it->second);
          recompute_coverage(it->second);
          it->second.dirty = true;
          it->second.in_flight = false;
          instances_.erase(jt);
          ++merges;
          changed = true;
          break;
        }
      }
    }
  }
  return merges;
}

bool TreeManager::coverage_gate(const TreeInstance& instance) const {
  return instance.coverage.max_sensor_distance >= cfg_.min_sensor_distance &&
         instance.coverage.coverage_angle >= cfg_.min_coverage_angle;
}

std::vector<int> TreeManager::request_reconstructions() {
  std::vector<int> ids;
  for (auto& [id, instance] : instances_) {
    if (instance.in_flight || !coverage_gate(instance)) {
      continue;
    }
    if (instance.reconstruction && !instance.dirty) {
      continue;
    }
    if (instance.failed_fingerprint != 0 && instance.fingerprint() == instance.failed_fingerprint) {
      continue;  // identical input already failed; wait for new data
    }
    instance.in_flight = true;
    ids.push_back(id);
  }
  return ids;
}

void TreeManager::commit_reconstruction(int id, std::optional<StemModel> stem,
                                        std::optional<TreeTraits> traits, uint64_t fingerprint) {
  auto it = instances_.find(id);
  if (it == instances_.end()) {
    return;  // merged away while in flight
  }
  TreeInstance& instance = it->second;
  instance.in_flight = false;
  if (stem) {
    instance.reconstruction = std::move(stem);
    instance.traits = std::move(traits);
    instance.reconstructed_fingerprint = fingerprint;
    instance.failed_fingerprint = 0;
  }
  instance.dirty = instance.fingerprint() != fingerprint;
}

void TreeManager::commit_failure(int id, uint64_t fingerprint) {
  auto it = instances_.find(id);
  if (it != instances_.end()) {
    it->second.in_flight = false;
    it->second.failed_fingerprint = fingerprint;
  }
}

size_t TreeManager::total_clusters() const {
  size_t n = 0;
  for (const auto& [id, instance] : instances_) {
    n += instance.clusters.size();
  }
  return n;
}

}  // namespace forestinv
