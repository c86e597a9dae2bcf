// Database of tree instances: cluster association, realignment against the
// pose graph, coverage gating, and reconstruction bookkeeping. Raw
// measurements stay in their sensor frames; only map-frame derivations move.

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include "core/pose_graph.hpp"
#include "core/reconstruction.hpp"
#include "core/segmentation.hpp"

namespace forestinv {

struct TreeManagerConfig {
  double association_distance = 0.5;  // d_assoc, x-y at the reference height
  double min_sensor_distance = 10.0;  // d_min^reco
  double min_coverage_angle = M_PI;   // α_min^reco
  double aperture_extra_deg = 10.0;   // added to atan(r/d) per observation
  double reference_height = 1.3;
};

struct CoverageState {
  double max_sensor_distance = 0.0;
  double coverage_angle = 0.0;  // radians, union of observation apertures
  int observation_count = 0;
};

/// Union size of the angular intervals [b - δ, b + δ] around each bearing,
/// modulo 2π, capped at 2π. Entries are (bearing, half-aperture δ).
double coverage_angle(const std::vector<std::pair<double, double>>& bearings);

struct StoredCluster {
  TreeCluster data;        // immutable sensor-frame measurement
  RigidTransform map_tf;   // cached map <- sensor at the last realignment
  AxisCandidate axis_map;  // derived: axis in map frame under map_tf
  Vec3 sensor_position = Vec3::Zero();
  double sensor_distance = 0.0;
  double bearing = 0.0;  // direction from the axis to the sensor
  bool stale = false;    // timestamp missing from the latest snapshot
};

struct TreeInstance {
  int id = 0;
  std::vector<StoredCluster> clusters;
  AxisCandidate map_axis;  // support-weighted consensus of the cluster axes
  uint64_t pose_revision = 0;
  CoverageState coverage;
  std::optional<StemModel> reconstruction;
  std::optional<TreeTraits> traits;
  bool dirty = true;      // clusters changed since the last reconstruction
  bool in_flight = false;
  uint64_t reconstructed_fingerprint = 0;
  uint64_t failed_fingerprint = 0;

  uint64_t fingerprint() const;
  double max_point_z() const;  // over all clusters, map frame
  std::vector<MapCluster> map_clusters() const;
};

class TreeManager {
 public:
  explicit TreeManager(const TreeManagerConfig& cfg = {}) : cfg_(cfg) {}

  /// Joins the nearest instance within the association distance, or creates
  /// a new one. The cluster's map data is derived from `map_tf`.
  int associate_cluster(const TreeCluster& cluster, const RigidTransform& map_tf);

  /// Recomputes every cluster's map-frame derivation from the snapshot,
  /// refits instance axes, and merges instances that collapsed onto each
  /// other. Returns the number of clusters whose pose actually moved.
  size_t realign_all(const PoseGraphSnapshot& snapshot);

  bool coverage_gate(const TreeInstance& instance) const;

  /// Gated instances that need (re-)reconstruction; marks them in-flight.
  std::vector<int> request_reconstructions();

  /// Commits a finished reconstruction. `fingerprint` is the instance
  /// fingerprint captured when the work was issued; if the instance changed
  /// in the meantime it stays dirty.
  void commit_reconstruction(int id, std::optional<StemModel> stem,
                             std::optional<TreeTraits> traits, uint64_t fingerprint);

  /// Records a failed/deferred attempt; the instance is not retried until
  /// its fingerprint changes (more data or realignment).
  void commit_failure(int id, uint64_t fingerprint);

  const std::map<int, TreeInstance>& instances() const { return instances_; }
  std::map<int, TreeInstance>& instances() { return instances_; }
  const TreeManagerConfig& config() const { return cfg_; }

  size_t total_clusters() const;

 private:
  void refit_axis(TreeInstance& instance) const;
  void recompute_coverage(TreeInstance& instance) const;
  void derive_map_state(StoredCluster& cluster) const;
  size_t merge_collapsed_instances();

  TreeManagerConfig cfg_;
  std::map<int, TreeInstance> instances_;
  int next_id_ = 0;
};

}  // namespace forestinv
