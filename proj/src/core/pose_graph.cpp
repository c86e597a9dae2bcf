#include "core/pose_graph.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>

namespace forestinv {

namespace {

// Timestamps are exact-match association keys. The epsilon only guards
// against text round-trip jitter; it is far below any real frame spacing.
constexpr double kStampTolerance = 1e-9;

const StampedTransform* find_in(const std::vector<StampedTransform>& poses, double t) {
  auto it = std::lower_bound(poses.begin(), poses.end(), t - kStampTolerance,
                             [](const StampedTransform& s, double v) { return s.timestamp < v; });
  if (it != poses.end() && std::abs(it->timestamp - t) <= kStampTolerance) {
    return &*it;
  }
  return nullptr;
}

}  // namespace

const RigidTransform* PoseGraphSnapshot::find(double t) const {
  const StampedTransform* s = find_in(transforms, t);
  return s ? &s->tf : nullptr;
}

RigidTransform PoseGraphSnapshot::lookup(double t) const {
  const RigidTransform* tf = find(t);
  if (!tf) {
    throw lookup_error("pose graph snapshot: unknown timestamp " + std::to_string(t));
  }
  return *tf;
}

uint64_t PoseGraph::insert_pose(double t, const RigidTransform& tf) {
  std::unique_lock lock(mutex_);
  if (!poses_.empty() && t <= poses_.back().timestamp + kStampTolerance) {
    throw ordering_error("insert_pose: timestamp " + std::to_string(t) +
                         " not greater than latest " + std::to_string(poses_.back().timestamp));
  }
  poses_.push_back({t, tf});
  return revision_;
}

uint64_t PoseGraph::apply_loop_closure(const LoopClosureEvent& event) {
  std::unique_lock lock(mutex_);
  if (event.t_start > event.t_end) {
    throw invalid_argument_error("apply_loop_closure: t_start > t_end");
  }
  // Validate all timestamps before touching anything, so readers never see a
  // half-applied event.
  std::vector<StampedTransform*> targets;
  targets.reserve(event.corrections.size());
  for (const auto& c : event.corrections) {
    auto* entry = const_cast<StampedTransform*>(find_in(poses_, c.timestamp));
    if (!entry) {
      throw lookup_error("apply_loop_closure: unknown timestamp " +
                         std::to_string(c.timestamp));
    }
    targets.push_back(entry);
  }
  for (size_t i = 0; i < targets.size(); ++i) {
    const auto& c = event.corrections[i];
    if (event.kind == LoopClosureEvent::Kind::Absolute) {
      targets[i]->tf = c.tf;
    } else {
      targets[i]->tf = c.tf.compose(targets[i]->tf);
    }
  }
  revision_ += 1;
  return revision_;
}

RigidTransform PoseGraph::lookup(double t) const {
  std::shared_lock lock(mutex_);
  const StampedTransform* s = find_in(poses_, t);
  if (!s) {
    throw lookup_error("pose graph: unknown timestamp " + std::to_string(t));
  }
  return s->tf;
}

bool PoseGraph::contains(double t) const {
  std::shared_lock lock(mutex_);
  return find_in(poses_, t) != nullptr;
}

PoseGraphSnapshot PoseGraph::snapshot() const {
  std::shared_lock lock(mutex_);
  return {poses_, revision_};
}

uint64_t PoseGraph::revision() const {
  std::shared_lock lock(mutex_);
  return revision_;
}

size_t PoseGraph::size() const {
  std::shared_lock lock(mutex_);
  return poses_.size();
}

double PoseGraph::latest_timestamp() const {
  std::shared_lock lock(mutex_);
  if (poses_.empty()) {
    throw lookup_error("pose graph: empty");
  }
  return poses_.back().timestamp;
}

}  // namespace forestinv
