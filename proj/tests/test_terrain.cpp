#include <doctest.h>

#include <cmath>

#include "core/rng.hpp"
#include "core/terrain.hpp"

using namespace forestinv;

namespace {

/// Dense ground sampling of an analytic plane plus stem-like columns above.
PointCloud plane_scene(double slope_x, double slope_y, double extent, Rng& rng,
                       double noise = 0.0) {
  PointCloud cloud(FrameTag::map());
  for (int i = 0; i < 24000; ++i) {
    const double x = rng.uniform(0.0, extent);
    const double y = rng.uniform(0.0, extent);
    cloud.push_back({x, y, slope_x * x + slope_y * y + (noise > 0 ? rng.normal(0, noise) : 0.0)});
  }
  // trees: narrow columns of above-ground points
  for (int tree = 0; tree < 6; ++tree) {
    const double tx = rng.uniform(2.0, extent - 2.0);
    const double ty = rng.uniform(2.0, extent - 2.0);
    for (int k = 0; k < 400; ++k) {
      const double angle = rng.uniform(0, 2 * M_PI);
      const double h = rng.uniform(0.3, 6.0);
      cloud.push_back({tx + 0.15 * std::cos(angle), ty + 0.15 * std::sin(angle),
                       slope_x * tx + slope_y * ty + h});
    }
  }
  return cloud;
}

TerrainMesh flat_mesh(double height, double extent, const Vec3& sensor) {
  TerrainMesh mesh;
  mesh.origin_x = 0.0;
  mesh.origin_y = 0.0;
  mesh.grid_resolution = 0.5;
  mesh.nx = static_cast<int>(extent / 0.5) + 1;
  mesh.ny = mesh.nx;
  mesh.heights.assign(static_cast<size_t>(mesh.nx) * mesh.ny, height);
  mesh.sensor_position = sensor;
  return mesh;
}

}  // namespace

TEST_CASE("CSF: flat ground recovered within 2 cm") {
  Rng rng(101);
  const PointCloud cloud = plane_scene(0.0, 0.0, 20.0, rng, 0.005);
  const TerrainMesh mesh = cloth_simulation_filter(cloud, CSFParams{}, {10, 10, 1.2});
  REQUIRE(mesh.nx >= 2);
  for (int iy = 0; iy < mesh.ny; ++iy) {
    for (int ix = 0; ix < mesh.nx; ++ix) {
      CHECK(std::abs(mesh.height(ix, iy)) <= 0.02);
    }
  }
}

TEST_CASE("CSF: 10 degree slope recovered within 3 cm") {
  Rng rng(103);
  const double slope = std::tan(10.0 * M_PI / 180.0);
  const PointCloud cloud = plane_scene(slope, 0.0, 20.0, rng);
  const TerrainMesh mesh = cloth_simulation_filter(cloud, CSFParams{}, {10, 10, 2.0});
  for (int iy = 1; iy + 1 < mesh.ny; ++iy) {
    for (int ix = 1; ix + 1 < mesh.nx; ++ix) {
      const Vec3 v = mesh.vertex(ix, iy);
      CHECK(std::abs(v.z() - slope * v.x()) <= 0.03);
    }
  }
}

TEST_CASE("CSF: empty payload is an input error") {
  PointCloud empty;
  CHECK_THROWS_AS(cloth_simulation_filter(empty, CSFParams{}, Vec3::Zero()), Error);
}

TEST_CASE("blend_weight endpoints: 1 at the sensor, 0 at half the min extent, 0.5 between") {
  const TerrainMesh mesh = flat_mesh(0.0, 20.0, {5.0, 5.0, 0.0});
  const double half_extent = 0.5 * std::min(mesh.width(), mesh.length());

  CHECK(blend_weight({5.0, 5.0, 0.0}, mesh) == doctest::Approx(1.0));
  CHECK(blend_weight({5.0 + half_extent, 5.0, 0.0}, mesh) == doctest::Approx(0.0));
  CHECK(blend_weight({5.0 + 0.5 * half_extent, 5.0, 0.0}, mesh) == doctest::Approx(0.5));
  // beyond the radius the clamp holds
  CHECK(blend_weight({5.0 + 2.0 * half_extent, 5.0, 0.0}, mesh) == 0.0);
}

TEST_CASE("fusing one flat mesh into an empty global adopts its heights") {
  const TerrainMesh mesh = flat_mesh(1.5, 10.0, {5, 5, 2.7});
  GlobalDTM global;
  const FusionStats stats = fuse_local_dtm(global, mesh, RigidTransform::identity());
  CHECK(stats.rays_hit > 0);
  CHECK(stats.degenerate_triangles == 0);
  CHECK(terrain_height_at(global, 5.0, 5.0) == doctest::Approx(1.5));
}

TEST_CASE("fusing two identical meshes leaves heights, doubles weights") {
  const TerrainMesh mesh = flat_mesh(0.8, 10.0, {5, 5, 2.0});
  GlobalDTM global;
  fuse_local_dtm(global, mesh, RigidTransform::identity());
  const auto weights_once = global.samples;
  fuse_local_dtm(global, mesh, RigidTransform::identity());
  CHECK(terrain_height_at(global, 4.0, 6.0) == doctest::Approx(0.8));
  for (const auto& [key, sample] : global.samples) {
    const auto it = weights_once.find(key);
    REQUIRE(it != weights_once.end());
    CHECK(sample.weight == doctest::Approx(2.0 * it->second.weight));
    CHECK(sample.height == doctest::Approx(it->second.height));
  }
}

TEST_CASE("two overlapping slopes blend to the per-sample weighted mean (oracle)") {
  // mesh A: z = 0.1 x, sensor at (5,5); mesh B: z = 2 - 0.1 x, sensor at (9,5)
  TerrainMesh a = flat_mesh(0.0, 14.0, {5, 5, 1.0});
  TerrainMesh b = flat_mesh(0.0, 14.0, {9, 5, 1.0});
  for (int iy = 0; iy < a.ny; ++iy) {
    for (int ix = 0; ix < a.nx; ++ix) {
      a.heights[iy * a.nx + ix] = 0.1 * (a.origin_x + ix * a.grid_resolution);
      b.heights[iy * b.nx + ix] = 2.0 - 0.1 * (b.origin_x + ix * b.grid_resolution);
    }
  }
  GlobalDTM global;
  fuse_local_dtm(global, a, RigidTransform::identity());
  fuse_local_dtm(global, b, RigidTransform::identity());

  // per-sample oracle: direct weighted mean of the two analytic heights
  for (double x = 2.0; x <= 12.0; x += 1.0) {
    for (double y = 3.0; y <= 11.0; y += 1.0) {
      const double ha = 0.1 * x;
      const double hb = 2.0 - 0.1 * x;
      const double wa = blend_weight({x, y, ha}, a);
      const double wb = blend_weight({x, y, hb}, b);
      if (wa + wb <= 0.0) {
        continue;
      }
      const double expected = (wa * ha + wb * hb) / (wa + wb);
      CHECK(terrain_height_at(global, x, y) == doctest::Approx(expected).epsilon(1e-9));
    }
  }
}

TEST_CASE("fusion is order-independent within floating tolerance") {
  Rng rng(7);
  std::vector<TerrainMesh> meshes;
  for (int m = 0; m < 4; ++m) {
    TerrainMesh mesh = flat_mesh(0.0, 12.0, {rng.uniform(3, 9), rng.uniform(3, 9), 1.0});
    mesh.origin_x = rng.uniform(-2, 2);
    mesh.origin_y = rng.uniform(-2, 2);
    for (size_t i = 0; i < mesh.heights.size(); ++i) {
      mesh.heights[i] = rng.uniform(-1.0, 1.0);
    }
    meshes.push_back(std::move(mesh));
  }
  GlobalDTM forward, backward;
  for (const auto& m : meshes) {
    fuse_local_dtm(forward, m, RigidTransform::identity());
  }
  for (auto it = meshes.rbegin(); it != meshes.rend(); ++it) {
    fuse_local_dtm(backward, *it, RigidTransform::identity());
  }
  REQUIRE(forward.samples.size() == backward.samples.size());
  for (const auto& [key, sample] : forward.samples) {
    const auto it = backward.samples.find(key);
    REQUIRE(it != backward.samples.end());
    CHECK(std::abs(sample.height - it->second.height) < 1e-9);
    CHECK(std::abs(sample.weight - it->second.weight) < 1e-9);
  }
}

TEST_CASE("terrain_height_at: exact at samples, interpolating, coverage error outside") {
  const TerrainMesh mesh = flat_mesh(0.0, 10.0, {5, 5, 1});
  GlobalDTM global;
  fuse_local_dtm(global, mesh, RigidTransform::identity());
  CHECK(terrain_height_at(global, 5.0, 5.0) == doctest::Approx(0.0));
  CHECK(terrain_height_at(global, 5.125, 5.125) == doctest::Approx(0.0));
  CHECK_THROWS_AS(terrain_height_at(global, 500.0, 500.0), Error);
}

TEST_CASE("terrain_height_at on a fused slope matches the analytic plane") {
  TerrainMesh mesh = flat_mesh(0.0, 16.0, {8, 8, 1});
  const double slope = 0.12;
  for (int iy = 0; iy < mesh.ny; ++iy) {
    for (int ix = 0; ix < mesh.nx; ++ix) {
      mesh.heights[iy * mesh.nx + ix] = slope * (ix * mesh.grid_resolution);
    }
  }
  GlobalDTM global;
  fuse_local_dtm(global, mesh, RigidTransform::identity());
  for (double x = 1.0; x < 15.0; x += 0.61) {
    const double expected = slope * x;
    CHECK(std::abs(terrain_height_at(global, x, 8.0) - expected) <= slope * 0.25 + 1e-9);
  }
}

TEST_CASE("C0 continuity across the boundary where a local DTM's weight fades out") {
  // two flat meshes sharing exact geometry; transects crossing the boundary
  // where mesh B's weight reaches zero must stay continuous
  TerrainMesh a = flat_mesh(0.35, 30.0, {15, 15, 1});
  TerrainMesh b = flat_mesh(0.35, 14.0, {7, 15, 1});
  GlobalDTM global;
  fuse_local_dtm(global, a, RigidTransform::identity());
  fuse_local_dtm(global, b, RigidTransform::identity());

  const double eps = 0.05;
  for (double x = 1.0; x + eps <= 28.0; x += 0.13) {
    const double h0 = terrain_height_at(global, x, 15.0);
    const double h1 = terrain_height_at(global, x + eps, 15.0);
    CHECK(std::abs(h1 - h0) <= 1e-6);  // flat shared geometry: slope term is zero
  }
}

TEST_CASE("height-field property: one finite height per covered sample") {
  Rng rng(31);
  const PointCloud cloud = plane_scene(0.05, -0.03, 15.0, rng, 0.01);
  const TerrainMesh mesh = cloth_simulation_filter(cloud, CSFParams{}, {7, 7, 1.5});
  CHECK(mesh.heights.size() == static_cast<size_t>(mesh.nx) * mesh.ny);
  GlobalDTM global;
  fuse_local_dtm(global, mesh, RigidTransform::identity());
  CHECK(!global.samples.empty());
  for (const auto& [key, sample] : global.samples) {
    CHECK(std::isfinite(sample.height));
    CHECK(sample.weight >= 0.0);
  }
}
