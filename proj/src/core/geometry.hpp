// Foundational geometric types shared by the whole pipeline: points, stamped
// clouds, rigid transforms, circles, and the basic cloud filters.

#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <cstdint>
#include <string>
#include <vector>

#include "core/error.hpp"

namespace forestinv {

using Vec3 = Eigen::Vector3d;
using Vec2 = Eigen::Vector2d;

/// Identifies the coordinate frame a cloud lives in: the fixed map frame, or
/// the moving sensor frame at a given timestamp.
struct FrameTag {
  enum class Kind : uint8_t { Map, Sensor };

  Kind kind = Kind::Map;
  double stamp = 0.0;  // only meaningful for Sensor frames

  static FrameTag map() { return FrameTag{Kind::Map, 0.0}; }
  static FrameTag sensor(double t) { return FrameTag{Kind::Sensor, t}; }

  bool operator==(const FrameTag& o) const {
    return kind == o.kind && (kind == Kind::Map || stamp == o.stamp);
  }
  bool operator!=(const FrameTag& o) const { return !(*this == o); }

  std::string str() const;
};

struct PointCloud {
  std::vector<Vec3> points;
  FrameTag frame = FrameTag::map();

  PointCloud() = default;
  explicit PointCloud(FrameTag f) : frame(f) {}

  size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
  void reserve(size_t n) { points.reserve(n); }
  void push_back(const Vec3& p) { points.push_back(p); }
  const Vec3& operator[](size_t i) const { return points[i]; }
  Vec3& operator[](size_t i) { return points[i]; }
};

/// Map-from-sensor style rigid body transform (unit quaternion + translation).
struct RigidTransform {
  Eigen::Quaterniond rotation = Eigen::Quaterniond::Identity();
  Vec3 translation = Vec3::Zero();

  static RigidTransform identity() { return {}; }
  static RigidTransform from_translation(const Vec3& t) {
    return {Eigen::Quaterniond::Identity(), t};
  }
  static RigidTransform from_yaw(double yaw, const Vec3& t = Vec3::Zero()) {
    return {Eigen::Quaterniond(Eigen::AngleAxisd(yaw, Vec3::UnitZ())), t};
  }

  Vec3 apply(const Vec3& p) const { return rotation * p + translation; }
  Vec3 rotate(const Vec3& v) const { return rotation * v; }

  RigidTransform inverse() const {
    const Eigen::Quaterniond qi = rotation.conjugate();
    return {qi, qi * (-translation)};
  }

  /// this ∘ other (apply `other` first).
  RigidTransform compose(const RigidTransform& other) const {
    return {(rotation * other.rotation).normalized(), rotation * other.translation + translation};
  }

  bool approx_equal(const RigidTransform& o, double tol = 1e-9) const {
    const double dt = (translation - o.translation).norm();
    const double dq = std::min((rotation.coeffs() - o.rotation.coeffs()).norm(),
                               (rotation.coeffs() + o.rotation.coeffs()).norm());
    return dt <= tol && dq <= tol;
  }
};

/// Circle in the map-frame x-y plane at slice height `height_z`.
struct Circle2D {
  double cx = 0.0;
  double cy = 0.0;
  double radius = 0.0;
  double height_z = 0.0;

  Vec2 center() const { return {cx, cy}; }
};

// --- Cloud filters ---------------------------------------------------------

/// One output point per occupied voxel of side `resolution`, placed at the
/// centroid of that voxel's input points. Throws on non-positive resolution.
PointCloud voxel_downsample(const PointCloud& cloud, double resolution);

/// Number of voxels of side `resolution` occupied by `cloud`.
size_t voxel_occupancy_count(const PointCloud& cloud, double resolution);

/// Keeps exactly the points with Euclidean distance to `origin` <= max_range,
/// preserving order.
PointCloud range_crop(const PointCloud& cloud, const Vec3& origin, double max_range);

/// Applies `tf` to every point. The cloud's frame must equal `source`; the
/// result is tagged `target`.
PointCloud transform_cloud(const PointCloud& cloud, const RigidTransform& tf, FrameTag source,
                           FrameTag target);

/// Points with |z - z_center| <= thickness/2 (inclusive on both boundaries).
PointCloud horizontal_slice(const PointCloud& cloud, double z_center, double thickness);

/// Half-open variant [z_center - t/2, z_center + t/2) used when tiling a cloud
/// into stacked slices, so each point lands in exactly one slice.
PointCloud horizontal_slice_half_open(const PointCloud& cloud, double z_center, double thickness);

}  // namespace forestinv
