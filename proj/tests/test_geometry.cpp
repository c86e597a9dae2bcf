#include <doctest.h>

#include <set>
#include <tuple>

#include "core/geometry.hpp"
#include "core/rng.hpp"

using namespace forestinv;

namespace {

// independent hash-grid occupancy oracle
size_t oracle_voxel_count(const PointCloud& cloud, double res) {
  std::set<std::tuple<int64_t, int64_t, int64_t>> cells;
  for (const auto& p : cloud.points) {
    cells.insert({static_cast<int64_t>(std::floor(p.x() / res)),
                  static_cast<int64_t>(std::floor(p.y() / res)),
                  static_cast<int64_t>(std::floor(p.z() / res))});
  }
  return cells.size();
}

RigidTransform random_transform(Rng& rng) {
  const Eigen::Quaterniond q =
      Eigen::Quaterniond(rng.normal(), rng.normal(), rng.normal(), rng.normal()).normalized();
  return {q, Vec3(rng.uniform(-5, 5), rng.uniform(-5, 5), rng.uniform(-5, 5))};
}

}  // namespace

TEST_CASE("voxel_downsample: empty cloud stays empty") {
  PointCloud cloud;
  CHECK(voxel_downsample(cloud, 0.01).empty());
}

TEST_CASE("voxel_downsample: rejects non-positive resolution") {
  PointCloud cloud;
  cloud.push_back({0, 0, 0});
  CHECK_THROWS_AS(voxel_downsample(cloud, 0.0), Error);
  CHECK_THROWS_AS(voxel_downsample(cloud, -1.0), Error);
}

TEST_CASE("voxel_downsample: eight points in one voxel collapse to their centroid") {
  PointCloud cloud;
  Vec3 sum = Vec3::Zero();
  for (int i = 0; i < 8; ++i) {
    const Vec3 p(0.001 + 0.0002 * i, 0.002, 0.003 + 0.0001 * i);
    cloud.push_back(p);
    sum += p;
  }
  const PointCloud out = voxel_downsample(cloud, 0.01);
  REQUIRE(out.size() == 1);
  CHECK((out[0] - sum / 8.0).norm() == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("voxel_downsample: output count equals oracle occupancy on a dense cube") {
  Rng rng(42);
  PointCloud cloud;
  cloud.reserve(1000000);
  for (int i = 0; i < 1000000; ++i) {
    cloud.push_back({rng.uniform01(), rng.uniform01(), rng.uniform01()});
  }
  const double res = 0.01;
  const PointCloud out = voxel_downsample(cloud, res);
  CHECK(out.size() == oracle_voxel_count(cloud, res));
  CHECK(out.size() <= cloud.size());
}

TEST_CASE("voxel_downsample: idempotent on voxel occupancy") {
  Rng rng(7);
  PointCloud cloud;
  for (int i = 0; i < 5000; ++i) {
    cloud.push_back({rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-2, 2)});
  }
  const double res = 0.05;
  const PointCloud once = voxel_downsample(cloud, res);
  const PointCloud twice = voxel_downsample(once, res);
  CHECK(once.size() == twice.size());
  CHECK(oracle_voxel_count(once, res) == oracle_voxel_count(twice, res));
}

TEST_CASE("range_crop: boundary point retained, origin retained") {
  PointCloud cloud;
  cloud.push_back({3.0, 0.0, 0.0});  // exactly at max_range
  cloud.push_back({0.0, 0.0, 0.0});
  cloud.push_back({3.0001, 0.0, 0.0});
  const PointCloud out = range_crop(cloud, Vec3::Zero(), 3.0);
  REQUIRE(out.size() == 2);
  CHECK(out[0].x() == 3.0);
  CHECK(out[1].x() == 0.0);
}

TEST_CASE("range_crop: equals linear-scan oracle on random points") {
  Rng rng(3);
  PointCloud cloud;
  for (int i = 0; i < 1000; ++i) {
    cloud.push_back({rng.uniform(-30, 30), rng.uniform(-30, 30), rng.uniform(-30, 30)});
  }
  const Vec3 origin(1, -2, 0.5);
  const double r = 20.0;
  const PointCloud out = range_crop(cloud, origin, r);
  std::vector<Vec3> expected;
  for (const auto& p : cloud.points) {
    if ((p - origin).norm() <= r) {
      expected.push_back(p);
    }
  }
  REQUIRE(out.size() == expected.size());
  for (size_t i = 0; i < expected.size(); ++i) {
    CHECK((out[i] - expected[i]).norm() == 0.0);  // order preserved
  }
}

TEST_CASE("transform_cloud: identity is bitwise, translation moves, frames checked") {
  PointCloud cloud(FrameTag::sensor(1.5));
  cloud.push_back({0, 0, 0});
  cloud.push_back({1, 2, 3});

  const PointCloud same = transform_cloud(cloud, RigidTransform::identity(),
                                          FrameTag::sensor(1.5), FrameTag::sensor(1.5));
  CHECK(same[1].x() == 1.0);
  CHECK(same[1].y() == 2.0);
  CHECK(same[1].z() == 3.0);

  const PointCloud moved = transform_cloud(
      cloud, RigidTransform::from_translation({1, 2, 3}), FrameTag::sensor(1.5), FrameTag::map());
  CHECK((moved[0] - Vec3(1, 2, 3)).norm() == doctest::Approx(0.0));
  CHECK(moved.frame == FrameTag::map());

  CHECK_THROWS_AS(
      transform_cloud(cloud, RigidTransform::identity(), FrameTag::map(), FrameTag::map()), Error);
}

TEST_CASE("transform_cloud: random transform round-trips within 1e-9") {
  Rng rng(11);
  PointCloud cloud(FrameTag::map());
  for (int i = 0; i < 200; ++i) {
    cloud.push_back({rng.uniform(-10, 10), rng.uniform(-10, 10), rng.uniform(-10, 10)});
  }
  const RigidTransform tf = random_transform(rng);
  const PointCloud forward = transform_cloud(cloud, tf, FrameTag::map(), FrameTag::sensor(0));
  const PointCloud back = transform_cloud(forward, tf.inverse(), FrameTag::sensor(0),
                                          FrameTag::map());
  for (size_t i = 0; i < cloud.size(); ++i) {
    CHECK((back[i] - cloud[i]).norm() < 1e-9);
  }
}

TEST_CASE("transform_cloud: rigidity preserves pairwise distances") {
  Rng rng(13);
  PointCloud cloud(FrameTag::map());
  for (int i = 0; i < 60; ++i) {
    cloud.push_back({rng.uniform(-4, 4), rng.uniform(-4, 4), rng.uniform(-4, 4)});
  }
  const RigidTransform tf = random_transform(rng);
  const PointCloud out = transform_cloud(cloud, tf, FrameTag::map(), FrameTag::map());
  for (size_t i = 0; i + 1 < cloud.size(); i += 7) {
    const double before = (cloud[i] - cloud[i + 1]).norm();
    const double after = (out[i] - out[i + 1]).norm();
    CHECK(std::abs(before - after) < 1e-9);
  }
}

TEST_CASE("range_crop commutes with rigid transforms (cardinality)") {
  Rng rng(17);
  PointCloud cloud(FrameTag::map());
  for (int i = 0; i < 500; ++i) {
    cloud.push_back({rng.uniform(-25, 25), rng.uniform(-25, 25), rng.uniform(-5, 5)});
  }
  const Vec3 origin(2, 1, 0);
  const double r = 15.0;
  const RigidTransform tf = random_transform(rng);

  const PointCloud crop_then_tf =
      transform_cloud(range_crop(cloud, origin, r), tf, FrameTag::map(), FrameTag::map());
  const PointCloud tf_then_crop =
      range_crop(transform_cloud(cloud, tf, FrameTag::map(), FrameTag::map()), tf.apply(origin), r);
  CHECK(crop_then_tf.size() == tf_then_crop.size());
}

TEST_CASE("horizontal_slice: inclusive boundaries, empty when out of band") {
  PointCloud cloud;
  cloud.push_back({0, 0, 0.75});  // z_center - t/2 exactly
  cloud.push_back({0, 0, 1.0});
  cloud.push_back({0, 0, 1.25});  // z_center + t/2 exactly
  cloud.push_back({0, 0, 0.74});
  cloud.push_back({0, 0, 1.26});
  const PointCloud slice = horizontal_slice(cloud, 1.0, 0.5);
  CHECK(slice.size() == 3);

  PointCloud below;
  below.push_back({0, 0, -5});
  CHECK(horizontal_slice(below, 1.0, 0.2).empty());
}

TEST_CASE("horizontal_slice: analytic cylinder count matches linear-scan oracle") {
  Rng rng(23);
  PointCloud cloud;
  for (int i = 0; i < 20000; ++i) {
    const double angle = rng.uniform(0, 2 * M_PI);
    cloud.push_back({0.15 * std::cos(angle), 0.15 * std::sin(angle), rng.uniform(0.0, 4.0)});
  }
  const double z = 2.0, t = 0.1;
  size_t expected = 0;
  for (const auto& p : cloud.points) {
    if (std::abs(p.z() - z) <= t / 2) {
      ++expected;
    }
  }
  CHECK(horizontal_slice(cloud, z, t).size() == expected);
}

TEST_CASE("horizontal_slice_half_open tiles partition every point exactly once") {
  Rng rng(29);
  PointCloud cloud;
  for (int i = 0; i < 3000; ++i) {
    cloud.push_back({rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(0.0, 5.0)});
  }
  const double t = 0.5;
  size_t total = 0;
  for (int k = 0; k < 10; ++k) {
    total += horizontal_slice_half_open(cloud, t / 2 + k * t, t).size();
  }
  CHECK(total == cloud.size());
}
