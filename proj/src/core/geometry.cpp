#include "core/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

namespace forestinv {

std::string FrameTag::str() const {
  if (kind == Kind::Map) {
    return "map";
  }
  return "sensor@" + std::to_string(stamp);
}

namespace {

struct VoxelKey {
  int64_t x, y, z;
  bool operator==(const VoxelKey& o) const { return x == o.x && y == o.y && z == o.z; }
};

struct VoxelKeyHash {
  size_t operator()(const VoxelKey& k) const {
    uint64_t h = 1469598103934665603ULL;
    for (uint64_t v : {static_cast<uint64_t>(k.x), static_cast<uint64_t>(k.y),
                       static_cast<uint64_t>(k.z)}) {
      h ^= v;
      h *= 1099511628211ULL;
    }
    return static_cast<size_t>(h);
  }
};

VoxelKey voxel_key(const Vec3& p, double inv_res) {
  return {static_cast<int64_t>(std::floor(p.x() * inv_res)),
          static_cast<int64_t>(std::floor(p.y() * inv_res)),
          static_cast<int64_t>(std::floor(p.z() * inv_res))};
}

}  // namespace

PointCloud voxel_downsample(const PointCloud& cloud, double resolution) {
  if (!(resolution > 0.0)) {
    throw invalid_argument_error("voxel_downsample: resolution must be > 0");
  }
  const double inv_res = 1.0 / resolution;

  struct Accum {
    Vec3 sum = Vec3::Zero();
    size_t count = 0;
    size_t first_index = 0;
  };
  std::unordered_map<VoxelKey, Accum, VoxelKeyHash> grid;
  grid.reserve(cloud.size());
  for (size_t i = 0; i < cloud.size(); ++i) {
    auto [it, inserted] = grid.try_emplace(voxel_key(cloud[i], inv_res));
    if (inserted) {
      it->second.first_index = i;
    }
    it->second.sum += cloud[i];
    it->second.count += 1;
  }

  // Order output by first appearance so the result is input-order stable.
  std::vector<std::pair<size_t, Vec3>> cells;
  cells.reserve(grid.size());
  for (const auto& [key, acc] : grid) {
    cells.emplace_back(acc.first_index, acc.sum / static_cast<double>(acc.count));
  }
  std::sort(cells.begin(), cells.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });

  PointCloud out(cloud.frame);
  out.reserve(cells.size());
  for (const auto& [idx, centroid] : cells) {
    out.push_back(centroid);
  }
  return out;
}

size_t voxel_occupancy_count(const PointCloud& cloud, double resolution) {
  if (!(resolution > 0.0)) {
    throw invalid_argument_error("voxel_occupancy_count: resolution must be > 0");
  }
  const double inv_res = 1.0 / resolution;
  std::unordered_map<VoxelKey, char, VoxelKeyHash> seen;
  seen.reserve(cloud.size());
  for (const auto& p : cloud.points) {
    seen.emplace(voxel_key(p, inv_res), 1);
  }
  return seen.size();
}

PointCloud range_crop(const PointCloud& cloud, const Vec3& origin, double max_range) {
  if (!(max_range > 0.0)) {
    throw invalid_argument_error("range_crop: max_range must be > 0");
  }
  const double r2 = max_range * max_range;
  PointCloud out(cloud.frame);
  out.reserve(cloud.size());
  for (const auto& p : cloud.points) {
    if ((p - origin).squaredNorm() <= r2) {
      out.push_back(p);
    }
  }
  return out;
}

PointCloud transform_cloud(const PointCloud& cloud, const RigidTransform& tf, FrameTag source,
                           FrameTag target) {
  if (cloud.frame != source) {
    throw frame_error("transform_cloud: cloud frame " + cloud.frame.str() +
                      " does not match transform source " + source.str());
  }
  PointCloud out(target);
  out.reserve(cloud.size());
  const Eigen::Matrix3d R = tf.rotation.toRotationMatrix();
  for (const auto& p : cloud.points) {
    out.push_back(R * p + tf.translation);
  }
  return out;
}

PointCloud horizontal_slice(const PointCloud& cloud, double z_center, double thickness) {
  if (!(thickness > 0.0)) {
    throw invalid_argument_error("horizontal_slice: thickness must be > 0");
  }
  const double half = 0.5 * thickness;
  PointCloud out(cloud.frame);
  for (const auto& p : cloud.points) {
    if (std::abs(p.z() - z_center) <= half) {
      out.push_back(p);
    }
  }
  return out;
}

PointCloud horizontal_slice_half_open(const PointCloud& cloud, double z_center, double thickness) {
  if (!(thickness > 0.0)) {
    throw invalid_argument_error("horizontal_slice: thickness must be > 0");
  }
  const double lo = z_center - 0.5 * thickness;
  const double hi = z_center + 0.5 * thickness;
  PointCloud out(cloud.frame);
  for (const auto& p : cloud.points) {
    if (p.z() >= lo && p.z() < hi) {
      out.push_back(p);
    }
  }
  return out;
}

}  // namespace forestinv
