#include <doctest.h>

#include <limits>

#include "core/payload.hpp"
#include "core/rng.hpp"

using namespace forestinv;

namespace {

ScanFrame frame_at(double t, const Vec3& position, int points_around = 5) {
  ScanFrame frame;
  frame.timestamp = t;
  frame.sensor_pose = RigidTransform::from_translation(position);
  frame.cloud.frame = FrameTag::sensor(t);
  for (int i = 0; i < points_around; ++i) {
    frame.cloud.push_back({0.5 + 0.01 * i, 0.2, -1.0});
  }
  return frame;
}

}  // namespace

TEST_CASE("no emission below the trigger length") {
  PayloadAccumulator acc({.trigger_length = 20.0, .voxel_resolution = 0.01, .max_range = 20.0});
  for (int i = 0; i < 190; ++i) {  // 19 m at 0.1 m per frame
    const auto payload = acc.push_scan(frame_at(0.1 * i, {0.1 * i, 0, 0}));
    CHECK_FALSE(payload.has_value());
  }
}

TEST_CASE("one payload at 20 m, trajectory_length >= 20") {
  PayloadAccumulator acc({.trigger_length = 20.0, .voxel_resolution = 0.01, .max_range = 20.0});
  std::optional<PayloadCloud> payload;
  int emissions = 0;
  for (int i = 0; i <= 205; ++i) {
    auto p = acc.push_scan(frame_at(0.1 * i, {0.1 * i, 0, 0}));
    if (p) {
      payload = p;
      ++emissions;
    }
  }
  REQUIRE(emissions == 1);
  CHECK(payload->trajectory_length >= 20.0);
  // center timestamp: the frame whose cumulative path first reaches 10 m
  CHECK(payload->center_timestamp == doctest::Approx(10.0));
  CHECK(payload->cloud.frame == FrameTag::sensor(payload->center_timestamp));
}

TEST_CASE("stationary sensor never emits") {
  PayloadAccumulator acc;
  for (int i = 0; i < 1000; ++i) {
    CHECK_FALSE(acc.push_scan(frame_at(0.1 * i, {1, 2, 3})).has_value());
  }
  CHECK(acc.buffered_length() == 0.0);
}

TEST_CASE("out-of-order frames are rejected") {
  PayloadAccumulator acc;
  acc.push_scan(frame_at(1.0, {0, 0, 0}));
  CHECK_THROWS_AS(acc.push_scan(frame_at(0.5, {1, 0, 0})), Error);
}

TEST_CASE("downsampling never adds points; crop bound holds") {
  PayloadAccumulator acc({.trigger_length = 5.0, .voxel_resolution = 0.05, .max_range = 4.0});
  Rng rng(1);
  size_t fed_points = 0;
  std::optional<PayloadCloud> payload;
  for (int i = 0; i <= 60; ++i) {
    ScanFrame frame;
    frame.timestamp = 0.1 * i;
    frame.sensor_pose = RigidTransform::from_translation({0.1 * i, 0, 0});
    frame.cloud.frame = FrameTag::sensor(frame.timestamp);
    for (int k = 0; k < 50; ++k) {
      frame.cloud.push_back(
          {rng.uniform(-8, 8), rng.uniform(-8, 8), rng.uniform(-2, 2)});
    }
    fed_points += frame.cloud.size();
    if (auto p = acc.push_scan(frame)) {
      payload = p;
      break;
    }
  }
  REQUIRE(payload.has_value());
  CHECK(payload->cloud.size() <= fed_points);
  // crop before voxelization keeps every centroid within max_range of the
  // center position, which lies on the sensor path
  const double limit = 4.0 + 0.05 * std::sqrt(3.0);
  for (const auto& p : payload->cloud.points) {
    double nearest = std::numeric_limits<double>::infinity();
    for (const auto& s : payload->sensor_path) {
      nearest = std::min(nearest, (p - s).norm());
    }
    CHECK(nearest <= limit);
    CHECK(p.norm() <= 4.0 + 1e-9);
  }
}

TEST_CASE("consecutive payloads partition the stream") {
  PayloadAccumulator acc({.trigger_length = 5.0, .voxel_resolution = 0.001, .max_range = 50.0});
  // one distinct point per frame lets us count contributions exactly
  size_t emitted_points = 0;
  size_t frames = 0;
  for (int i = 0; i <= 200; ++i) {
    ScanFrame frame;
    frame.timestamp = 0.1 * i;
    frame.sensor_pose = RigidTransform::from_translation({0.1 * i, 0, 0});
    frame.cloud.frame = FrameTag::sensor(frame.timestamp);
    frame.cloud.push_back({0.0, 0.01 * i, 0.0});  // distinct voxel per frame, inside max_range
    ++frames;
    if (auto p = acc.push_scan(frame)) {
      emitted_points += p->cloud.size();
    }
  }
  if (auto tail = acc.flush(0.0)) {
    emitted_points += tail->cloud.size();
  }
  CHECK(emitted_points == frames);  // every frame contributed to exactly one payload
}

TEST_CASE("payload_budget") {
  PayloadCloud payload;
  payload.trajectory_length = 20.0;
  CHECK(payload_budget(payload, 1.0101) == doctest::Approx(19.8).epsilon(1e-3));
  CHECK(payload_budget(payload, 2.0) == doctest::Approx(10.0));
  CHECK_THROWS_AS(payload_budget(payload, 0.0), Error);
  CHECK_THROWS_AS(payload_budget(payload, -1.0), Error);
}
