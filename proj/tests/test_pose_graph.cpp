#include <doctest.h>

#include "core/pose_graph.hpp"
#include "core/rng.hpp"

using namespace forestinv;

TEST_CASE("insert and exact-match lookup") {
  PoseGraph graph;
  graph.insert_pose(0.0, RigidTransform::identity());
  graph.insert_pose(1.0, RigidTransform::from_translation({1, 0, 0}));

  CHECK(graph.lookup(0.0).approx_equal(RigidTransform::identity()));
  CHECK(graph.lookup(1.0).translation.x() == 1.0);
  CHECK_THROWS_AS(graph.lookup(0.5), Error);
}

TEST_CASE("out-of-order insertion is rejected") {
  PoseGraph graph;
  graph.insert_pose(0.0, RigidTransform::identity());
  graph.insert_pose(1.0, RigidTransform::identity());
  CHECK_THROWS_AS(graph.insert_pose(0.5, RigidTransform::identity()), Error);
  CHECK_THROWS_AS(graph.insert_pose(1.0, RigidTransform::identity()), Error);
}

TEST_CASE("insertions do not bump the revision, corrections do") {
  PoseGraph graph;
  CHECK(graph.revision() == 0);
  graph.insert_pose(0.0, RigidTransform::identity());
  CHECK(graph.revision() == 0);

  LoopClosureEvent empty_event;
  empty_event.t_start = 0.0;
  empty_event.t_end = 0.0;
  CHECK(graph.apply_loop_closure(empty_event) == 1);
  CHECK(graph.lookup(0.0).approx_equal(RigidTransform::identity()));  // unchanged
}

TEST_CASE("single pose corrected by a translation delta") {
  PoseGraph graph;
  graph.insert_pose(2.0, RigidTransform::from_translation({5, 0, 0}));
  LoopClosureEvent event;
  event.t_start = 2.0;
  event.t_end = 2.0;
  event.kind = LoopClosureEvent::Kind::Delta;
  event.corrections.push_back({2.0, RigidTransform::from_translation({1, 0, 0})});
  graph.apply_loop_closure(event);
  CHECK(graph.lookup(2.0).translation.x() == doctest::Approx(6.0));
}

TEST_CASE("unknown correction timestamp leaves the graph untouched") {
  PoseGraph graph;
  graph.insert_pose(0.0, RigidTransform::identity());
  LoopClosureEvent event;
  event.t_start = 0.0;
  event.t_end = 3.0;
  event.corrections.push_back({0.0, RigidTransform::from_translation({1, 0, 0})});
  event.corrections.push_back({3.0, RigidTransform::identity()});  // unknown
  CHECK_THROWS_AS(graph.apply_loop_closure(event), Error);
  CHECK(graph.lookup(0.0).approx_equal(RigidTransform::identity()));  // atomic: no partial apply
  CHECK(graph.revision() == 0);
}

TEST_CASE("drifting trajectory restored to ground truth by exact inverse corrections") {
  Rng rng(5);
  PoseGraph graph;
  std::vector<StampedTransform> truth;
  LoopClosureEvent event;
  event.kind = LoopClosureEvent::Kind::Absolute;
  event.t_start = 0.0;
  for (int i = 0; i < 50; ++i) {
    const double t = 0.1 * i;
    const RigidTransform true_pose =
        RigidTransform::from_yaw(0.02 * i, {0.5 * i, 0.1 * i, 0.0});
    // drift grows along the trajectory
    const RigidTransform drift = RigidTransform::from_yaw(
        0.001 * i, {0.01 * i + rng.normal(0.0, 1e-4), 0.005 * i, 0.0});
    graph.insert_pose(t, drift.compose(true_pose));
    truth.push_back({t, true_pose});
    event.corrections.push_back({t, true_pose});
    event.t_end = t;
  }
  graph.apply_loop_closure(event);
  for (const auto& s : truth) {
    CHECK(graph.lookup(s.timestamp).approx_equal(s.tf, 1e-9));
  }
}

TEST_CASE("snapshots are isolated from later corrections") {
  PoseGraph graph;
  graph.insert_pose(1.0, RigidTransform::identity());
  const PoseGraphSnapshot before = graph.snapshot();

  LoopClosureEvent event;
  event.t_start = event.t_end = 1.0;
  event.kind = LoopClosureEvent::Kind::Absolute;
  event.corrections.push_back({1.0, RigidTransform::from_translation({0, 9, 0})});
  graph.apply_loop_closure(event);

  CHECK(before.lookup(1.0).approx_equal(RigidTransform::identity()));
  CHECK(graph.lookup(1.0).translation.y() == doctest::Approx(9.0));
  CHECK(graph.snapshot().revision == before.revision + 1);
}

TEST_CASE("snapshot revisions are equal without intervening changes and monotone across them") {
  PoseGraph graph;
  graph.insert_pose(0.0, RigidTransform::identity());
  const auto a = graph.snapshot();
  const auto b = graph.snapshot();
  CHECK(a.revision == b.revision);

  uint64_t last = b.revision;
  for (int i = 0; i < 3; ++i) {
    LoopClosureEvent event;
    event.t_start = event.t_end = 0.0;
    event.corrections.push_back({0.0, RigidTransform::identity()});
    event.kind = LoopClosureEvent::Kind::Absolute;
    graph.apply_loop_closure(event);
    const auto snap = graph.snapshot();
    CHECK(snap.revision > last);
    last = snap.revision;
  }
}
