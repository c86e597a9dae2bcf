#include "core/synth.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace forestinv {

double TerrainLaw::height_at(double x, double y) const {
  switch (kind) {
    case Kind::Flat:
      return base_z;
    case Kind::Slope:
      return base_z + slope_x * x + slope_y * y;
    case Kind::Undulating:
      return base_z + amplitude * std::sin(2.0 * M_PI * x / wavelength) *
                          std::cos(2.0 * M_PI * y / wavelength);
  }
  return base_z;
}

namespace {

struct SynthTree {
  Vec3 base = Vec3::Zero();    // on the terrain
  double base_radius = 0.15;
  double taper = 0.012;
  Vec2 lean = Vec2::Zero();    // horizontal center drift per meter of height
  double stem_height = 9.0;
  double canopy_radius = 2.0;

  double radius_at(double h) const { return base_radius - taper * h; }
  Vec2 center_at(double h) const {
    return Vec2(base.x(), base.y()) + lean * h;
  }
};

struct Waypoint {
  Vec3 position;
  double heading;
};

std::vector<Waypoint> lawnmower_path(const SyntheticForestSpec& spec) {
  // Row sweeps along x, connected by transitions along y; sampled at the
  // per-frame step.
  const double step = spec.speed / spec.frame_rate;
  std::vector<Waypoint> path;
  const double x0 = spec.margin;
  const double x1 = spec.extent_x - spec.margin;
  double y = spec.margin;
  bool forward = true;
  bool first_row = true;
  while (y <= spec.extent_y - spec.margin + 1e-9) {
    const double xa = forward ? x0 : x1;
    const double xb = forward ? x1 : x0;
    const double heading = forward ? 0.0 : M_PI;
    const double row_length = std::abs(xb - xa);
    if (!first_row) {
      // transition from the previous row end to this row start
      const double ty0 = y - spec.row_spacing;
      for (double s = step; s < spec.row_spacing; s += step) {
        path.push_back({{xa, ty0 + s, 0.0}, M_PI / 2.0});
      }
    }
    for (double s = 0.0; s <= row_length + 1e-9; s += step) {
      const double x = forward ? xa + s : xa - s;
      path.push_back({{x, y, 0.0}, heading});
    }
    forward = !forward;
    first_row = false;
    y += spec.row_spacing;
  }
  return path;
}

bool occluded(const Vec2& sensor_xy, double sensor_z, const Vec3& point,
              const std::vector<SynthTree>& trees, size_t skip_index) {
  const Vec2 target(point.x(), point.y());
  const Vec2 d = target - sensor_xy;
  const double len = d.norm();
  if (len < 1e-9) {
    return false;
  }
  for (size_t i = 0; i < trees.size(); ++i) {
    if (i == skip_index) {
      continue;
    }
    const SynthTree& tree = trees[i];
    const Vec2 c(tree.base.x(), tree.base.y());
    const double t = std::clamp((c - sensor_xy).dot(d) / (len * len), 0.0, 1.0);
    if (t <= 1e-6 || t >= 1.0 - 1e-6) {
      continue;
    }
    const Vec2 closest = sensor_xy + t * d;
    if ((closest - c).norm() > tree.base_radius) {
      continue;
    }
    // crossing height between the sensor and the point
    const double z = sensor_z + t * (point.z() - sensor_z);
    if (z >= tree.base.z() && z <= tree.base.z() + tree.stem_height) {
      return true;
    }
  }
  return false;
}

}  // namespace

SyntheticScene generate_scene(const SyntheticForestSpec& spec) {
  if (spec.tree_count > 0) {
    const double area = (spec.extent_x - 2 * spec.margin) * (spec.extent_y - 2 * spec.margin);
    if (spec.min_spacing * spec.min_spacing * spec.tree_count > area * 2.0) {
      throw invalid_argument_error("generate_scene: tree spacing infeasible for plot extent");
    }
    if (spec.min_spacing < 4.0 * spec.base_radius_max) {
      throw invalid_argument_error("generate_scene: spacing below twice the max stem diameter");
    }
  }

  Rng rng(spec.seed);
  SyntheticScene scene;
  scene.terrain = spec.terrain;
  scene.speed = spec.speed;

  // --- trees -----------------------------------------------------------------
  std::vector<SynthTree> trees;
  int attempts = 0;
  while (static_cast<int>(trees.size()) < spec.tree_count && attempts < spec.tree_count * 400) {
    ++attempts;
    const double x = rng.uniform(spec.margin + 1.0, spec.extent_x - spec.margin - 1.0);
    const double y = rng.uniform(spec.margin + 1.0, spec.extent_y - spec.margin - 1.0);
    bool ok = true;
    for (const auto& t : trees) {
      if (std::hypot(t.base.x() - x, t.base.y() - y) < spec.min_spacing) {
        ok = false;
        break;
      }
    }
    if (!ok) {
      continue;
    }
    SynthTree tree;
    tree.base = {x, y, spec.terrain.height_at(x, y)};
    tree.base_radius = rng.uniform(spec.base_radius_min, spec.base_radius_max);
    tree.taper = spec.taper_rate;
    const double lean_angle = std::abs(rng.normal(0.0, spec.lean_sigma_deg)) * M_PI / 180.0;
    const double lean_azimuth = rng.uniform(0.0, 2.0 * M_PI);
    tree.lean = std::tan(lean_angle) * Vec2(std::cos(lean_azimuth), std::sin(lean_azimuth));
    tree.stem_height = rng.uniform(spec.stem_height_min, spec.stem_height_max);
    // keep the radius positive along the stem
    tree.stem_height = std::min(tree.stem_height, (tree.base_radius - 0.02) / tree.taper);
    tree.canopy_radius = rng.uniform(1.2, 2.2);
    trees.push_back(tree);
  }
  if (static_cast<int>(trees.size()) < spec.tree_count) {
    throw invalid_argument_error("generate_scene: could not place all trees at the given spacing");
  }

  for (size_t i = 0; i < trees.size(); ++i) {
    const SynthTree& tree = trees[i];
    GroundTruthTree gt;
    gt.id = static_cast<int>(i);
    gt.base = tree.base;
    gt.dbh = 2.0 * tree.radius_at(1.3);
    gt.height = tree.stem_height + tree.canopy_radius;
    for (double h = 0.2; h <= tree.stem_height + 1e-9; h += 0.25) {
      const Vec2 c = tree.center_at(h);
      gt.stem_curve.push_back({h, c.x(), c.y(), 2.0 * tree.radius_at(h)});
    }
    scene.ground_truth.push_back(std::move(gt));
  }

  // --- trajectory with drift ---------------------------------------------------
  const auto path = lawnmower_path(spec);
  const double fov = spec.vertical_fov_deg * M_PI / 180.0;
  const double frame_dt = 1.0 / spec.frame_rate;

  RigidTransform drift = RigidTransform::identity();  // drifted <- true, local frame
  double segment_start_time = 0.0;
  double distance_since_closure = 0.0;
  Vec3 drift_direction = Vec3::Zero();
  double yaw_sign = 1.0;
  const auto reset_drift_bias = [&]() {
    const double az = rng.uniform(0.0, 2.0 * M_PI);
    drift_direction = {std::cos(az), std::sin(az), 0.0};
    yaw_sign = rng.uniform01() < 0.5 ? -1.0 : 1.0;
  };
  reset_drift_bias();

  std::vector<StampedTransform> segment_truth;
  Vec3 prev_position = path.empty() ? Vec3::Zero() : path.front().position;

  for (size_t i = 0; i < path.size(); ++i) {
    const double t = 0.1 + static_cast<double>(i) * frame_dt;
    Vec3 position = path[i].position;
    position.z() = spec.terrain.height_at(position.x(), position.y()) + spec.sensor_height;
    const RigidTransform true_pose = RigidTransform::from_yaw(path[i].heading, position);

    const double step_len = (position - prev_position).norm();
    prev_position = position;

    if (spec.enable_drift && i > 0) {
      // local-frame error accumulating along the path, reset at loop closures
      const double yaw_step = yaw_sign * spec.drift_yaw_deg_per_m * M_PI / 180.0 * step_len +
                              rng.normal(0.0, 0.1 * spec.drift_yaw_deg_per_m * M_PI / 180.0 *
                                                  std::max(step_len, 1e-6));
      Vec3 trans_step = drift_direction * spec.drift_translation_per_m * step_len;
      trans_step += Vec3(rng.normal(0.0, 0.25 * spec.drift_translation_per_m * step_len),
                         rng.normal(0.0, 0.25 * spec.drift_translation_per_m * step_len),
                         rng.normal(0.0, 0.1 * spec.drift_translation_per_m * step_len));
      const RigidTransform step = RigidTransform::from_yaw(yaw_step, trans_step);
      drift = drift.compose(step);
    }
    // drift perturbs the pose around the segment anchor
    const RigidTransform drifted_pose =
        spec.enable_drift ? RigidTransform{(true_pose.rotation * drift.rotation).normalized(),
                                           true_pose.translation +
                                               true_pose.rotation * drift.translation}
                          : true_pose;

    scene.true_trajectory.push_back({t, true_pose});
    scene.drifted_trajectory.push_back({t, drifted_pose});
    segment_truth.push_back({t, true_pose});

    // --- points for this frame (world frame first) ---------------------------
    PointCloud world(FrameTag::map());
    const Vec2 sensor_xy(position.x(), position.y());
    const double sensor_z = position.z();

    for (int k = 0; k < spec.terrain_points_per_frame; ++k) {
      const double ang = rng.uniform(0.0, 2.0 * M_PI);
      const double rad = spec.sensor_range * std::sqrt(rng.uniform01());
      const double px = position.x() + rad * std::cos(ang);
      const double py = position.y() + rad * std::sin(ang);
      const double pz = spec.terrain.height_at(px, py);
      const double horizontal = std::max(rad, 1e-6);
      if (std::abs(std::atan2(pz - sensor_z, horizontal)) > fov) {
        continue;
      }
      world.push_back({px, py, pz});
    }

    for (size_t ti = 0; ti < trees.size(); ++ti) {
      const SynthTree& tree = trees[ti];
      const double d = std::hypot(tree.base.x() - position.x(), tree.base.y() - position.y());
      if (d > spec.sensor_range) {
        continue;
      }
      const double bearing_to_sensor =
          std::atan2(position.y() - tree.base.y(), position.x() - tree.base.x());
      const double arc = spec.visible_arc_deg * M_PI / 180.0;

      // visible height band from the vertical field of view
      const double z_lo = std::max(tree.base.z(), sensor_z - d * std::tan(fov));
      const double z_hi = std::min(tree.base.z() + tree.stem_height, sensor_z + d * std::tan(fov));
      if (z_lo < z_hi) {
        const int n = static_cast<int>(std::lround(
            spec.stem_points_per_frame * std::clamp(6.0 / std::max(d, 2.0), 0.3, 1.5)));
        for (int k = 0; k < n; ++k) {
          const double z = rng.uniform(z_lo, z_hi);
          const double h = z - tree.base.z();
          const double r = tree.radius_at(h);
          if (r <= 0.0) {
            continue;
          }
          const double psi = bearing_to_sensor + rng.uniform(-0.5 * arc, 0.5 * arc);
          const Vec2 c = tree.center_at(h);
          Vec3 p(c.x() + r * std::cos(psi), c.y() + r * std::sin(psi), z);
          if (occluded(sensor_xy, sensor_z, p, trees, ti)) {
            continue;
          }
          p += Vec3(rng.normal(0.0, spec.noise_sigma), rng.normal(0.0, spec.noise_sigma),
                    rng.normal(0.0, spec.noise_sigma));
          world.push_back(p);
        }

        // branch whorls: rings of stubs just outside the stem surface
        if (spec.whorl_spacing > 0.0) {
          for (double wh = 2.0; wh < tree.stem_height; wh += spec.whorl_spacing) {
            const double wz = tree.base.z() + wh;
            if (wz < z_lo || wz > z_hi) {
              continue;
            }
            const int nw = std::max(2, n / 10);
            for (int k = 0; k < nw; ++k) {
              const double h = wh + rng.uniform(-0.06, 0.06);
              const double r = tree.radius_at(h) * rng.uniform(1.15, 1.6);
              const double psi = bearing_to_sensor + rng.uniform(-0.5 * arc, 0.5 * arc);
              const Vec2 c = tree.center_at(h);
              Vec3 p(c.x() + r * std::cos(psi), c.y() + r * std::sin(psi), tree.base.z() + h);
              p += Vec3(rng.normal(0.0, spec.noise_sigma), rng.normal(0.0, spec.noise_sigma),
                        rng.normal(0.0, spec.noise_sigma));
              world.push_back(p);
            }
          }
        }

        // clutter around the stem
        const int n_out = static_cast<int>(std::lround(spec.outlier_fraction * n));
        for (int k = 0; k < n_out; ++k) {
          const double ang = rng.uniform(0.0, 2.0 * M_PI);
          const double rad = rng.uniform(0.0, tree.base_radius + 0.8);
          const double z = rng.uniform(z_lo, std::min(z_hi, tree.base.z() + 6.0));
          const Vec2 c = tree.center_at(z - tree.base.z());
          world.push_back({c.x() + rad * std::cos(ang), c.y() + rad * std::sin(ang), z});
        }
      }

      // canopy blob above the stem, often clipped by the field of view
      const double canopy_base = tree.base.z() + tree.stem_height;
      for (int k = 0; k < spec.canopy_points_per_frame; ++k) {
        const double u = rng.uniform01();
        const double rad = tree.canopy_radius * std::cbrt(u);
        const double ang = rng.uniform(0.0, 2.0 * M_PI);
        const double elev = rng.uniform(-0.3, 1.0);
        const Vec2 c = tree.center_at(tree.stem_height);
        const Vec3 p(c.x() + rad * std::cos(ang), c.y() + rad * std::sin(ang),
                     canopy_base + elev * tree.canopy_radius);
        const double horizontal = std::hypot(p.x() - position.x(), p.y() - position.y());
        if (std::abs(std::atan2(p.z() - sensor_z, std::max(horizontal, 1e-6))) > fov) {
          continue;
        }
        if (horizontal > spec.sensor_range) {
          continue;
        }
        world.push_back(p);
      }
    }

    // into the sensor frame through the TRUE pose (the world is what it is);
    // the odometry the pipeline sees is the drifted pose
    ScanFrame frame;
    frame.timestamp = t;
    frame.sensor_pose = drifted_pose;
    frame.cloud = transform_cloud(world, true_pose.inverse(), FrameTag::map(),
                                  FrameTag::sensor(t));
    scene.frames.push_back(std::move(frame));

    distance_since_closure += step_len;
    const bool last = i + 1 == path.size();
    if ((distance_since_closure >= spec.loop_closure_interval || last) &&
        !segment_truth.empty() && spec.enable_drift) {
      LoopClosureEvent event;
      event.kind = LoopClosureEvent::Kind::Absolute;
      event.t_start = segment_truth.front().timestamp;
      event.t_end = segment_truth.back().timestamp;
      event.corrections = segment_truth;
      scene.loop_closures.push_back(std::move(event));
      segment_truth.clear();
      segment_start_time = t;
      distance_since_closure = 0.0;
      drift = RigidTransform::identity();
      reset_drift_bias();
    }
  }
  static_cast<void>(segment_start_time);
  return scene;
}

Circle2D brute_force_circle(const std::vector<Vec2>& points, double grid_step, double r_min,
                            double r_max, double inlier_band) {
  Vec2 lo = points.front(), hi = points.front();
  for (const auto& p : points) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  const double pad = 0.5 * r_max;
  int best_count = -1;
  Circle2D best;
  for (double cx = lo.x() - pad; cx <= hi.x() + pad; cx += grid_step) {
    for (double cy = lo.y() - pad; cy <= hi.y() + pad; cy += grid_step) {
      // histogram radii for this center; grid_step-wide bins
      for (double r = r_min; r <= r_max; r += grid_step) {
        int count = 0;
        for (const auto& p : points) {
          const double res = std::hypot(p.x() - cx, p.y() - cy) - r;
          if (std::abs(res) <= inlier_band) {
            ++count;
          }
        }
        if (count > best_count || (count == best_count && r < best.radius)) {
          best_count = count;
          best = {cx, cy, r, 0.0};
        }
      }
    }
  }
  // refine with the algebraic fit on the winning inliers
  std::vector<Vec2> inliers;
  for (const auto& p : points) {
    if (std::abs(std::hypot(p.x() - best.cx, p.y() - best.cy) - best.radius) <= inlier_band) {
      inliers.push_back(p);
    }
  }
  if (inliers.size() >= 3) {
    if (auto refined = bullock_fit(inliers)) {
      refined->height_z = best.height_z;
      return *refined;
    }
  }
  return best;
}

std::vector<std::vector<int>> brute_force_nearest_axis(const PointCloud& points,
                                                       const std::vector<AxisCandidate>& axes,
                                                       double assign_extra) {
  std::vector<std::vector<int>> assignment(axes.size());
  for (size_t i = 0; i < points.size(); ++i) {
    int best = -1;
    double best_d = std::numeric_limits<double>::infinity();
    for (size_t a = 0; a < axes.size(); ++a) {
      const double d = axes[a].distance_to(points[i]);
      if (d < best_d) {
        best_d = d;
        best = static_cast<int>(a);
      }
    }
    if (best >= 0 && best_d <= 3.0 * axes[best].radius + assign_extra) {
      assignment[best].push_back(static_cast<int>(i));
    }
  }
  return assignment;
}

std::vector<BenchSlice> generate_slice_suite(const SliceSuiteSpec& spec) {
  Rng rng(spec.seed);
  std::vector<BenchSlice> slices;
  slices.reserve(spec.slice_count);
  for (int s = 0; s < spec.slice_count; ++s) {
    BenchSlice bench;
    const double r = rng.uniform(spec.radius_min, spec.radius_max);
    const double cx = rng.uniform(-0.15, 0.15);
    const double cy = rng.uniform(-0.15, 0.15);
    bench.truth = {cx, cy, r, 0.0};

    const double sigma = rng.uniform(spec.noise_min, spec.noise_max);
    const double arc = rng.uniform(spec.arc_min_deg, spec.arc_max_deg) * M_PI / 180.0;
    const double arc_start = rng.uniform(0.0, 2.0 * M_PI);
    const int n_stem = static_cast<int>(
        rng.uniform(static_cast<double>(spec.stem_points_min),
                    static_cast<double>(spec.stem_points_max) + 1.0));

    auto& points = bench.slice.points;
    for (int k = 0; k < n_stem; ++k) {
      const double psi = arc_start + rng.uniform(0.0, arc);
      points.emplace_back(cx + r * std::cos(psi) + rng.normal(0.0, sigma),
                          cy + r * std::sin(psi) + rng.normal(0.0, sigma));
    }
    // bark / twig ring outside the surface: pulls inlier counting outward
    const int n_bark = static_cast<int>(std::lround(spec.bark_fraction * n_stem));
    for (int k = 0; k < n_bark; ++k) {
      const double psi = arc_start + rng.uniform(0.0, arc);
      const double rr = r * rng.uniform(spec.bark_band_min, spec.bark_band_max);
      points.emplace_back(cx + rr * std::cos(psi) + rng.normal(0.0, sigma),
                          cy + rr * std::sin(psi) + rng.normal(0.0, sigma));
    }
    // uniform clutter box
    const int n_clutter = static_cast<int>(std::lround(spec.clutter_fraction * n_stem));
    for (int k = 0; k < n_clutter; ++k) {
      points.emplace_back(cx + rng.uniform(-(r + 0.5), r + 0.5),
                          cy + rng.uniform(-(r + 0.5), r + 0.5));
    }
    // occasional branch blob near the stem
    if (rng.uniform01() < spec.branch_probability) {
      const double ang = rng.uniform(0.0, 2.0 * M_PI);
      const double dist = r * rng.uniform(spec.branch_distance_min, spec.branch_distance_max);
      const Vec2 blob(cx + dist * std::cos(ang), cy + dist * std::sin(ang));
      const int n_blob = 10 + static_cast<int>(rng.uniform_index(20));
      for (int k = 0; k < n_blob; ++k) {
        points.emplace_back(blob.x() + rng.normal(0.0, 0.03), blob.y() + rng.normal(0.0, 0.03));
      }
    }
    slices.push_back(std::move(bench));
  }
  return slices;
}

}  // namespace forestinv
