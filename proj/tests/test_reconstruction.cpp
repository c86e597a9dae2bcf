#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "core/reconstruction.hpp"
#include "core/rng.hpp"
#include "core/spatial.hpp"
#include "core/synth.hpp"

using namespace forestinv;

namespace {

Slice2D circle_slice(double cx, double cy, double r, int n, Rng& rng, double noise = 0.0,
                     double arc = 2 * M_PI, double arc_start = 0.0) {
  Slice2D slice;
  for (int i = 0; i < n; ++i) {
    const double a = arc_start + rng.uniform(0.0, arc);
    slice.points.emplace_back(cx + r * std::cos(a) + (noise > 0 ? rng.normal(0, noise) : 0.0),
                              cy + r * std::sin(a) + (noise > 0 ? rng.normal(0, noise) : 0.0));
  }
  return slice;
}

double algebraic_cost(const std::vector<Vec2>& points, double cx, double cy, double r) {
  double cost = 0.0;
  for (const auto& p : points) {
    const double v = (p.x() - cx) * (p.x() - cx) + (p.y() - cy) * (p.y() - cy) - r * r;
    cost += v * v;
  }
  return cost;
}

}  // namespace

TEST_CASE("circumcircle identity: (1,0),(0,1),(-1,0) -> center (0,0), r=1") {
  const auto vote = circumcircle({1, 0}, {0, 1}, {-1, 0}, 1e-9);
  REQUIRE(vote.has_value());
  CHECK(vote->cx == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(vote->cy == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(vote->r == doctest::Approx(1.0));
}

TEST_CASE("collinear triplet rejected") {
  CHECK_FALSE(circumcircle({0, 0}, {1, 1}, {2, 2}, 1e-6).has_value());
  CHECK_FALSE(circumcircle({0, 0}, {1, 1.0000001}, {2, 2}, 1e-6).has_value());
}

TEST_CASE("sample_triplet_circle rejects out-of-bounds radii") {
  ReconstructionConfig cfg;
  cfg.r_max = 2.0;
  std::vector<Vec2> points;
  Rng rng(1);
  points.emplace_back(0.0, 0.0);
  points.emplace_back(5.0, 0.5);
  points.emplace_back(10.0, 0.0);
  std::vector<double> cumulative{1, 2, 3};
  int accepted = 0;
  for (int i = 0; i < 50; ++i) {
    if (sample_triplet_circle(points, cumulative, rng, cfg)) {
      ++accepted;
    }
  }
  CHECK(accepted == 0);  // r ~ 25 m > r_max
}

TEST_CASE("density_weights: isolated points uniform; blob points heavier; oracle equality") {
  std::vector<Vec2> isolated = {{0, 0}, {10, 0}, {0, 10}, {10, 10}};
  const auto uniform = density_weights(isolated, 0.05);
  for (double w : uniform) {
    CHECK(w == doctest::Approx(0.25));
  }

  Rng rng(3);
  std::vector<Vec2> mixed;
  for (int i = 0; i < 30; ++i) {
    mixed.emplace_back(rng.normal(0, 0.01), rng.normal(0, 0.01));
  }
  mixed.emplace_back(5.0, 5.0);
  const auto weights = density_weights(mixed, 0.05);
  for (size_t i = 0; i < 30; ++i) {
    CHECK(weights[i] > weights.back());
  }

  std::vector<Vec2> random_pts;
  for (int i = 0; i < 200; ++i) {
    random_pts.emplace_back(rng.uniform(-0.3, 0.3), rng.uniform(-0.3, 0.3));
  }
  const double radius = 0.05;
  const auto fast = density_weights(random_pts, radius);
  double total = 0.0;
  std::vector<double> counts(random_pts.size(), 0.0);
  for (size_t i = 0; i < random_pts.size(); ++i) {
    for (size_t j = 0; j < random_pts.size(); ++j) {
      if ((random_pts[i] - random_pts[j]).norm() <= radius) {
        counts[i] += 1.0;
      }
    }
  }
  for (double c : counts) {
    total += c;
  }
  for (size_t i = 0; i < random_pts.size(); ++i) {
    CHECK(fast[i] == doctest::Approx(counts[i] / total).epsilon(1e-12));
  }
}

TEST_CASE("octree mode finding equals brute-force neighbor counting on vote sets") {
  Rng rng(17);
  for (int trial = 0; trial < 4; ++trial) {
    std::vector<Vec3> votes;
    const int n = 500 + trial * 500;
    for (int i = 0; i < n; ++i) {
      if (i % 3 == 0) {
        votes.push_back({rng.normal(0.1, 0.01), rng.normal(-0.05, 0.01), rng.normal(0.15, 0.008)});
      } else {
        votes.push_back({rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5), rng.uniform(0.02, 0.5)});
      }
    }
    const double radius = 0.03;
    Octree octree(votes);
    size_t best_fast = 0, best_count_fast = 0;
    for (size_t v = 0; v < votes.size(); ++v) {
      const size_t c = octree.radius_count(votes[v], radius);
      if (c > best_count_fast) {
        best_count_fast = c;
        best_fast = v;
      }
    }
    size_t best_slow = 0, best_count_slow = 0;
    for (size_t v = 0; v < votes.size(); ++v) {
      size_t c = 0;
      for (const auto& u : votes) {
        if ((u - votes[v]).squaredNorm() <= radius * radius) {
          ++c;
        }
      }
      if (c > best_count_slow) {
        best_count_slow = c;
        best_slow = v;
      }
    }
    CHECK(best_count_fast == best_count_slow);
    CHECK((best_fast == best_slow ||
           (votes[best_fast] - votes[best_slow]).norm() <= 2 * radius));
  }
}

TEST_CASE("octree radius_query equals linear scan") {
  Rng rng(23);
  std::vector<Vec3> points;
  for (int i = 0; i < 1500; ++i) {
    points.push_back({rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)});
  }
  Octree octree(points);
  for (int q = 0; q < 20; ++q) {
    const Vec3 query(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
    const double radius = rng.uniform(0.05, 0.4);
    const auto fast = octree.radius_query(query, radius);
    std::vector<int> slow;
    for (size_t i = 0; i < points.size(); ++i) {
      if ((points[i] - query).norm() <= radius) {
        slow.push_back(static_cast<int>(i));
      }
    }
    CHECK(fast == slow);
  }
}

TEST_CASE("RHT: noiseless circle recovered within the vote sphere radius") {
  Rng data_rng(5);
  const Slice2D slice = circle_slice(0.3, -0.2, 0.17, 150, data_rng);
  ReconstructionConfig cfg;
  Rng rng(7);
  const auto fit = rht_fit(slice, cfg, rng);
  REQUIRE(fit.has_value());
  CHECK(std::hypot(fit->circle.cx - 0.3, fit->circle.cy + 0.2) <= cfg.vote_sphere_radius);
  CHECK(std::abs(fit->circle.radius - 0.17) <= cfg.vote_sphere_radius);
}

TEST_CASE("RHT: contaminated circle within 1 cm of the fine-grid exhaustive oracle truth") {
  Rng data_rng(11);
  Slice2D slice = circle_slice(0.0, 0.0, 0.15, 200, data_rng, 0.004);
  for (int i = 0; i < 50; ++i) {
    slice.points.emplace_back(data_rng.uniform(-0.5, 0.5), data_rng.uniform(-0.5, 0.5));
  }
  ReconstructionConfig cfg;
  Rng rng(13);
  const auto fit = rht_fit(slice, cfg, rng);
  REQUIRE(fit.has_value());

  const Circle2D oracle = brute_force_circle(slice.points, 0.002, 0.05, 0.4, cfg.inlier_band);
  CHECK(std::hypot(fit->circle.cx - oracle.cx, fit->circle.cy - oracle.cy) <= 0.01);
  CHECK(std::abs(fit->circle.radius - oracle.radius) <= 0.01);
  CHECK(std::hypot(fit->circle.cx, fit->circle.cy) <= 0.01);
  CHECK(std::abs(fit->circle.radius - 0.15) <= 0.01);
}

TEST_CASE("RHT beats inlier counting on a stem with a concentric bark ring") {
  Rng data_rng(19);
  Slice2D slice = circle_slice(0.0, 0.0, 0.15, 220, data_rng, 0.005);
  const Slice2D ring = circle_slice(0.0, 0.0, 0.15 * 1.3, 110, data_rng, 0.012);
  slice.points.insert(slice.points.end(), ring.points.begin(), ring.points.end());

  ReconstructionConfig cfg;
  Rng rng(21);
  const auto rht = rht_fit(slice, cfg, rng);
  REQUIRE(rht.has_value());
  CHECK(std::abs(rht->circle.radius - 0.15) <= 0.015);

  const auto hough = classical_hough_fit(slice, cfg);
  REQUIRE(hough.has_value());
  CHECK(hough->circle.radius > rht->circle.radius);
}

TEST_CASE("constrained RHT never violates the bounds relative to its seed") {
  Rng data_rng(29);
  ReconstructionConfig cfg;
  for (int trial = 0; trial < 10; ++trial) {
    Slice2D slice = circle_slice(data_rng.uniform(-0.1, 0.1), data_rng.uniform(-0.1, 0.1),
                                 data_rng.uniform(0.1, 0.3), 150, data_rng, 0.01);
    for (int i = 0; i < 40; ++i) {
      slice.points.emplace_back(data_rng.uniform(-0.6, 0.6), data_rng.uniform(-0.6, 0.6));
    }
    const Circle2D constraint{0.0, 0.0, 0.2, 0.0};
    Rng rng(trial);
    const auto fit = rht_fit(slice, cfg, rng, &constraint);
    if (!fit) {
      continue;
    }
    CHECK(std::hypot(fit->circle.cx, fit->circle.cy) <= cfg.center_drift + 1e-12);
    CHECK(std::abs(fit->circle.radius - 0.2) <= cfg.radius_drift + 1e-12);
  }
}

TEST_CASE("RHT translation equivariance: same seed, shifted slice, shifted result") {
  Rng data_rng(31);
  const Slice2D base = circle_slice(0.05, -0.08, 0.16, 180, data_rng, 0.006);
  Slice2D shifted = base;
  const double dx = 0.73, dy = -1.31;
  for (auto& p : shifted.points) {
    p += Vec2(dx, dy);
  }
  ReconstructionConfig cfg;
  Rng rng_a(777);
  Rng rng_b(777);
  const auto fit_a = rht_fit(base, cfg, rng_a);
  const auto fit_b = rht_fit(shifted, cfg, rng_b);
  REQUIRE(fit_a.has_value());
  REQUIRE(fit_b.has_value());
  CHECK(fit_b->circle.cx - fit_a->circle.cx == doctest::Approx(dx).epsilon(1e-9));
  CHECK(fit_b->circle.cy - fit_a->circle.cy == doctest::Approx(dy).epsilon(1e-9));
  CHECK(fit_b->circle.radius == doctest::Approx(fit_a->circle.radius).epsilon(1e-12));
}

TEST_CASE("RHT rotation robustness: fitted radius stable under slice rotation") {
  Rng data_rng(37);
  const Slice2D base = circle_slice(0.0, 0.0, 0.2, 200, data_rng, 0.006);
  ReconstructionConfig cfg;
  double max_radius_change = 0.0;
  for (uint64_t seed = 0; seed < 20; ++seed) {
    Slice2D rotated;
    const double angle = 0.31 * static_cast<double>(seed + 1);
    for (const auto& p : base.points) {
      rotated.points.emplace_back(p.x() * std::cos(angle) - p.y() * std::sin(angle),
                                  p.x() * std::sin(angle) + p.y() * std::cos(angle));
    }
    Rng rng_a(seed);
    Rng rng_b(seed);
    const auto fit_a = rht_fit(base, cfg, rng_a);
    const auto fit_b = rht_fit(rotated, cfg, rng_b);
    REQUIRE(fit_a.has_value());
    REQUIRE(fit_b.has_value());
    max_radius_change =
        std::max(max_radius_change, std::abs(fit_a->circle.radius - fit_b->circle.radius));
  }
  CHECK(max_radius_change < cfg.vote_sphere_radius);
}

TEST_CASE("classical Hough: noiseless circle within one bin of truth") {
  Rng data_rng(41);
  const Slice2D slice = circle_slice(0.1, 0.05, 0.18, 250, data_rng);
  ReconstructionConfig cfg;
  const auto fit = classical_hough_fit(slice, cfg);
  REQUIRE(fit.has_value());
  CHECK(std::abs(fit->circle.cx - 0.1) <= cfg.hough_center_bin);
  CHECK(std::abs(fit->circle.cy - 0.05) <= cfg.hough_center_bin);
  CHECK(std::abs(fit->circle.radius - 0.18) <= cfg.hough_radius_bin);
}

TEST_CASE("RANSAC: noiseless circle recovered; exhaustive triplet agreement on 12 points") {
  Rng data_rng(43);
  const Slice2D slice = circle_slice(-0.07, 0.12, 0.22, 160, data_rng);
  ReconstructionConfig cfg;
  Rng rng(47);
  const auto fit = ransac_fit(slice, cfg, rng, false);
  REQUIRE(fit.has_value());
  CHECK(std::hypot(fit->circle.cx + 0.07, fit->circle.cy - 0.12) <= cfg.inlier_band);
  CHECK(std::abs(fit->circle.radius - 0.22) <= cfg.inlier_band);

  Slice2D small = circle_slice(0.0, 0.0, 0.15, 9, data_rng, 0.002);
  small.points.emplace_back(0.3, 0.3);
  small.points.emplace_back(-0.25, 0.1);
  small.points.emplace_back(0.1, -0.33);
  int best_inliers = 0;
  for (size_t i = 0; i < small.points.size(); ++i) {
    for (size_t j = i + 1; j < small.points.size(); ++j) {
      for (size_t k = j + 1; k < small.points.size(); ++k) {
        const auto candidate =
            circumcircle(small.points[i], small.points[j], small.points[k], cfg.min_triplet_area);
        if (!candidate || candidate->r < cfg.r_min || candidate->r > cfg.r_max) {
          continue;
        }
        int inliers = 0;
        for (const auto& p : small.points) {
          if (std::abs(std::hypot(p.x() - candidate->cx, p.y() - candidate->cy) - candidate->r) <=
              cfg.inlier_band) {
            ++inliers;
          }
        }
        best_inliers = std::max(best_inliers, inliers);
      }
    }
  }
  ReconstructionConfig heavy = cfg;
  heavy.ransac_iterations = 20000;
  Rng rng2(49);
  const auto exhaustive_like = ransac_fit(small, heavy, rng2, false);
  REQUIRE(exhaustive_like.has_value());
  CHECK(exhaustive_like->inlier_count == best_inliers);
}

TEST_CASE("Bullock fit: exact on noiseless circles within 1e-9") {
  Rng rng(53);
  std::vector<Vec2> points;
  for (int i = 0; i < 100; ++i) {
    const double a = rng.uniform(0, 2 * M_PI);
    points.emplace_back(2.0 + 0.3 * std::cos(a), -1.0 + 0.3 * std::sin(a));
  }
  const auto circle = bullock_fit(points);
  REQUIRE(circle.has_value());
  CHECK(std::abs(circle->cx - 2.0) < 1e-9);
  CHECK(std::abs(circle->cy + 1.0) < 1e-9);
  CHECK(std::abs(circle->radius - 0.3) < 1e-9);
}

TEST_CASE("Bullock fit minimizes the algebraic cost (1 mm perturbations never improve)") {
  Rng rng(59);
  std::vector<Vec2> points;
  for (int i = 0; i < 120; ++i) {
    const double a = rng.uniform(0, 2 * M_PI);
    points.emplace_back(0.4 + 0.21 * std::cos(a) + rng.normal(0, 0.01),
                        0.1 + 0.21 * std::sin(a) + rng.normal(0, 0.01));
  }
  const auto circle = bullock_fit(points);
  REQUIRE(circle.has_value());
  const double best = algebraic_cost(points, circle->cx, circle->cy, circle->radius);
  for (int dx = -1; dx <= 1; ++dx) {
    for (int dy = -1; dy <= 1; ++dy) {
      for (int dr = -1; dr <= 1; ++dr) {
        if (dx == 0 && dy == 0 && dr == 0) {
          continue;
        }
        const double perturbed = algebraic_cost(points, circle->cx + 0.001 * dx,
                                                circle->cy + 0.001 * dy,
                                                circle->radius + 0.001 * dr);
        CHECK(perturbed >= best);
      }
    }
  }
}

TEST_CASE("align_and_refine: single cluster is identity; exact circle comes back exact") {
  Rng rng(61);
  Slice2D slice = circle_slice(2.0, -1.0, 0.3, 100, rng);
  CircleEstimate estimate;
  estimate.circle = {2.0, -1.0, 0.3, 1.3};
  estimate.inlier_count = 100;
  ReconstructionConfig cfg;
  const CircleEstimate refined = align_and_refine({slice}, {estimate}, cfg);
  CHECK(std::abs(refined.circle.cx - 2.0) < 1e-9);
  CHECK(std::abs(refined.circle.cy + 1.0) < 1e-9);
  CHECK(std::abs(refined.circle.radius - 0.3) < 1e-9);
  CHECK(refined.source == CircleEstimate::Source::LeastSquares);
}

TEST_CASE("align_and_refine: two clusters offset by 3 cm refine to within 5 mm of truth") {
  Rng rng(67);
  Slice2D a = circle_slice(0.0, 0.0, 0.18, 120, rng, 0.004, 0.6 * 2 * M_PI);
  Slice2D b = circle_slice(0.0, 0.0, 0.18, 120, rng, 0.004, 0.6 * 2 * M_PI, M_PI);
  const Vec2 drift(0.03, -0.012);
  for (auto& p : b.points) {
    p += drift;
  }
  ReconstructionConfig cfg;
  Rng fit_rng(71);
  const auto fit_a = rht_fit(a, cfg, fit_rng);
  const auto fit_b = rht_fit(b, cfg, fit_rng);
  REQUIRE(fit_a.has_value());
  REQUIRE(fit_b.has_value());
  const CircleEstimate refined = align_and_refine({a, b}, {*fit_a, *fit_b}, cfg);
  CHECK(std::abs(refined.circle.radius - 0.18) <= 0.005);
}

TEST_CASE("canopy hull: cube recovered; coplanar rejected; gift-wrap oracle equality") {
  std::vector<Vec3> cube;
  for (int i = 0; i < 8; ++i) {
    cube.push_back({static_cast<double>(i & 1), static_cast<double>((i >> 1) & 1),
                    static_cast<double>((i >> 2) & 1)});
  }
  const auto hull = convex_hull_3d(cube);
  REQUIRE(hull.has_value());
  CHECK(hull->vertices.size() == 8);

  Rng rng(73);
  std::vector<Vec3> blob;
  for (int i = 0; i < 50; ++i) {
    blob.push_back({rng.normal(0, 1), rng.normal(0, 1), rng.normal(0, 0.6)});
  }
  const auto blob_hull = convex_hull_3d(blob);
  REQUIRE(blob_hull.has_value());
  std::set<std::array<double, 3>> hull_vertices;
  for (const auto& v : blob_hull->vertices) {
    hull_vertices.insert({v.x(), v.y(), v.z()});
  }
  // facet-enumeration oracle: a triangle is a hull facet when all other
  // points lie on one side of its plane
  std::set<std::array<double, 3>> oracle_vertices;
  const size_t n = blob.size();
  for (size_t i = 0; i < n; ++i) {
    for (size_t j = i + 1; j < n; ++j) {
      for (size_t k = j + 1; k < n; ++k) {
        const Vec3 normal = (blob[j] - blob[i]).cross(blob[k] - blob[i]);
        if (normal.norm() < 1e-12) {
          continue;
        }
        int pos = 0, neg = 0;
        for (size_t m = 0; m < n; ++m) {
          if (m == i || m == j || m == k) {
            continue;
          }
          const double side = normal.dot(blob[m] - blob[i]);
          if (side > 1e-9) {
            ++pos;
          } else if (side < -1e-9) {
            ++neg;
          }
        }
        if (pos == 0 || neg == 0) {
          for (size_t m : {i, j, k}) {
            oracle_vertices.insert({blob[m].x(), blob[m].y(), blob[m].z()});
          }
        }
      }
    }
  }
  CHECK(hull_vertices == oracle_vertices);

  CHECK_FALSE(convex_hull_3d({{0, 0, 0}, {1, 0, 0}, {0, 1, 0}}).has_value());
  CHECK_FALSE(
      convex_hull_3d({{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {1, 1, 0}, {0.5, 0.5, 0}}).has_value());
}

TEST_CASE("extract_traits: bracketing, exact hit, extrapolation, flags") {
  StemModel stem;
  stem.base_height = 0.0;
  CircleEstimate c1, c2;
  c1.circle = {0.0, 0.0, 0.15, 1.0};
  c2.circle = {0.0, 0.0, 0.14, 1.5};
  stem.circles = {c1, c2};

  const TreeTraits traits = extract_traits(stem, 9.0);
  REQUIRE(traits.dbh.has_value());
  CHECK(*traits.dbh == doctest::Approx(0.288));
  CHECK(traits.reconstructed_stem_height == doctest::Approx(1.5));
  CHECK(traits.tree_height == doctest::Approx(9.0));
  REQUIRE(traits.stem_curve.size() == 2);
  CHECK(traits.stem_curve[0].height == doctest::Approx(1.0));

  StemModel exact = stem;
  exact.circles[0].circle.height_z = 1.3;
  exact.circles[0].circle.radius = 0.151;
  exact.circles[1].circle.height_z = 1.8;
  const TreeTraits exact_traits = extract_traits(exact, 9.0);
  REQUIRE(exact_traits.dbh.has_value());
  CHECK(*exact_traits.dbh == doctest::Approx(0.302));

  StemModel high = stem;
  high.circles[0].circle.height_z = 2.0;
  high.circles[1].circle.height_z = 2.5;
  const TreeTraits high_traits = extract_traits(high, 9.0);
  REQUIRE(high_traits.dbh.has_value());
  CHECK(*high_traits.dbh == doctest::Approx(0.30 + (0.28 - 0.30) * (1.3 - 2.0) / 0.5));

  StemModel low = stem;
  low.circles[0].circle.height_z = 0.4;
  low.circles[1].circle.height_z = 0.9;
  CHECK_FALSE(extract_traits(low, 9.0).dbh.has_value());
}

namespace {

std::vector<MapCluster> synthetic_stem_clusters(double base_radius, double taper, double lean_x,
                                                double stem_height, double noise, Rng& rng,
                                                int n_clusters = 3) {
  std::vector<MapCluster> clusters;
  for (int c = 0; c < n_clusters; ++c) {
    MapCluster cluster;
    cluster.cloud.frame = FrameTag::map();
    const double bearing = 2.0 * M_PI * c / n_clusters;
    cluster.sensor_position = {12.0 * std::cos(bearing), 12.0 * std::sin(bearing), 1.2};
    for (int i = 0; i < 20000; ++i) {
      const double h = rng.uniform(0.05, stem_height);
      const double r = base_radius - taper * h;
      const double a = bearing + rng.uniform(-1.2, 1.2);
      Vec3 p(lean_x * h + r * std::cos(a), r * std::sin(a), h);
      if (noise > 0) {
        p += Vec3(rng.normal(0, noise), rng.normal(0, noise), rng.normal(0, noise));
      }
      cluster.cloud.push_back(p);
    }
    clusters.push_back(std::move(cluster));
  }
  return clusters;
}

GlobalDTM flat_global_dtm(double extent) {
  TerrainMesh mesh;
  mesh.origin_x = -extent / 2;
  mesh.origin_y = -extent / 2;
  mesh.grid_resolution = 0.5;
  mesh.nx = static_cast<int>(extent / 0.5) + 1;
  mesh.ny = mesh.nx;
  mesh.heights.assign(static_cast<size_t>(mesh.nx) * mesh.ny, 0.0);
  mesh.sensor_position = {0, 0, 1};
  GlobalDTM global;
  fuse_local_dtm(global, mesh, RigidTransform::identity());
  return global;
}

}  // namespace

TEST_CASE("reconstruct_stem: noiseless tapered stem within 1 cm of the analytic taper") {
  Rng rng(79);
  const auto clusters = synthetic_stem_clusters(0.20, 0.0125, 0.0, 8.0, 0.0, rng);
  const GlobalDTM terrain = flat_global_dtm(10.0);
  ReconstructionConfig cfg;
  const auto stem = reconstruct_stem(clusters, {0.0, 0.0}, terrain, cfg, 4242);
  REQUIRE(stem.has_value());
  CHECK(stem->circles.size() >= 10);
  for (const auto& c : stem->circles) {
    const double expected_d = 2.0 * (0.20 - 0.0125 * c.circle.height_z);
    CHECK(std::abs(2.0 * c.circle.radius - expected_d) <= 0.01);
  }
}

TEST_CASE("reconstruct_stem: noisy stem with branch clusters, DBH within 2 cm") {
  Rng rng(83);
  auto clusters = synthetic_stem_clusters(0.18, 0.012, 0.0, 8.0, 0.01, rng);
  for (auto& cluster : clusters) {
    for (int w = 0; w < 3; ++w) {
      const double h = 2.0 + 1.5 * w;
      for (int i = 0; i < 60; ++i) {
        const double a = rng.uniform(0, 2 * M_PI);
        const double r = (0.18 - 0.012 * h) * rng.uniform(1.15, 1.6);
        cluster.cloud.push_back({r * std::cos(a), r * std::sin(a), h + rng.uniform(-0.05, 0.05)});
      }
    }
  }
  const GlobalDTM terrain = flat_global_dtm(10.0);
  ReconstructionConfig cfg;
  const auto stem = reconstruct_stem(clusters, {0.0, 0.0}, terrain, cfg, 1234);
  REQUIRE(stem.has_value());
  const TreeTraits traits = extract_traits(*stem, 8.0);
  REQUIRE(traits.dbh.has_value());
  const double true_dbh = 2.0 * (0.18 - 0.012 * 1.3);
  CHECK(std::abs(*traits.dbh - true_dbh) <= 0.02);
}

TEST_CASE("reconstruct_stem: leaning stem circle centers track the analytic axis within 2 cm") {
  Rng rng(89);
  const double lean = std::tan(10.0 * M_PI / 180.0);
  const auto clusters = synthetic_stem_clusters(0.20, 0.01, lean, 7.0, 0.005, rng);
  const GlobalDTM terrain = flat_global_dtm(12.0);
  ReconstructionConfig cfg;
  const auto stem = reconstruct_stem(clusters, {0.0, 0.0}, terrain, cfg, 77);
  REQUIRE(stem.has_value());
  CHECK(stem->circles.size() >= 8);
  for (const auto& c : stem->circles) {
    const double expected_x = lean * c.circle.height_z;
    CHECK(std::abs(c.circle.cx - expected_x) <= 0.02);
    CHECK(std::abs(c.circle.cy) <= 0.02);
  }
}

TEST_CASE("frustum stacking: circle heights strictly increase on the slice lattice") {
  Rng rng(97);
  const auto clusters = synthetic_stem_clusters(0.16, 0.01, 0.0, 6.0, 0.008, rng);
  const GlobalDTM terrain = flat_global_dtm(10.0);
  ReconstructionConfig cfg;
  const auto stem = reconstruct_stem(clusters, {0.0, 0.0}, terrain, cfg, 31);
  REQUIRE(stem.has_value());
  REQUIRE(stem->circles.size() >= 2);
  CHECK(stem->frustum_count() == stem->circles.size() - 1);
  for (size_t i = 0; i + 1 < stem->circles.size(); ++i) {
    const double dh = stem->circles[i + 1].circle.height_z - stem->circles[i].circle.height_z;
    CHECK(dh > 0.0);
    CHECK(std::abs(dh / cfg.slice_spacing - std::round(dh / cfg.slice_spacing)) < 1e-9);
  }
}

TEST_CASE("nms_initialize: consistent subset wins, outlier excluded, lowest returned") {
  ReconstructionConfig cfg;
  CircleEstimate a, b, c;
  a.circle = {0.00, 0.00, 0.20, 0.5};
  a.inlier_count = 90;
  b.circle = {0.02, 0.01, 0.19, 1.0};
  b.inlier_count = 80;
  c.circle = {0.60, 0.50, 0.35, 1.5};
  c.inlier_count = 300;

  const auto seed = nms_initialize({a, b, c}, {0, 1, 2}, cfg);
  REQUIRE(seed.has_value());
  CHECK(seed->height_z == doctest::Approx(0.5));
  CHECK(seed->radius == doctest::Approx(0.20));

  CircleEstimate d = c;
  d.circle = {-0.7, 0.9, 0.05, 1.0};
  CHECK_FALSE(nms_initialize({a, d, c}, {0, 1, 2}, cfg).has_value());
}
