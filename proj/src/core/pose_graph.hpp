// Time-varying store of stamped map-from-sensor transforms. Single writer
// (the SLAM ingestion path), many concurrent readers via snapshots.

#pragma once

#include <cstdint>
#include <optional>
#include <shared_mutex>
#include <vector>

#include "core/geometry.hpp"

namespace forestinv {

struct StampedTransform {
  double timestamp = 0.0;
  RigidTransform tf;  // map <- sensor
};

/// Immutable, consistent copy of the graph at a given revision.
struct PoseGraphSnapshot {
  std::vector<StampedTransform> transforms;  // ordered by timestamp
  uint64_t revision = 0;

  const RigidTransform* find(double t) const;
  RigidTransform lookup(double t) const;  // throws Lookup on unknown timestamp
};

struct LoopClosureEvent {
  // A correction either replaces a pose outright or left-composes a delta
  // onto the stored pose. File-loaded events carry absolute corrected poses;
  // synthetic tests often express corrections as deltas.
  enum class Kind { Absolute, Delta };

  double t_start = 0.0;
  double t_end = 0.0;
  Kind kind = Kind::Absolute;
  std::vector<StampedTransform> corrections;
};

class PoseGraph {
 public:
  /// Timestamps must be strictly increasing. Insertions do not bump the
  /// revision; only corrections do.
  uint64_t insert_pose(double t, const RigidTransform& tf);

  /// Atomically replaces the corrected poses and bumps the revision by one.
  /// Every corrected timestamp must already exist.
  uint64_t apply_loop_closure(const LoopClosureEvent& event);

  RigidTransform lookup(double t) const;  // exact-match, latest revision
  bool contains(double t) const;

  PoseGraphSnapshot snapshot() const;
  uint64_t revision() const;
  size_t size() const;
  double latest_timestamp() const;  // throws Lookup when empty

 private:
  mutable std::shared_mutex mutex_;
  std::vector<StampedTransform> poses_;
  uint64_t revision_ = 0;
};

}  // namespace forestinv
