// Synthetic forests with exact ground truth: tapered/leaning stems, branch
// whorls, clutter, terrain, lawnmower trajectories, odometry drift with
// scheduled loop closures, and the brute-force oracles used by tests.

#pragma once

#include <cstdint>
#include <vector>

#include "core/metrics.hpp"
#include "core/payload.hpp"
#include "core/pose_graph.hpp"
#include "core/reconstruction.hpp"
#include "core/rng.hpp"
#include "core/segmentation.hpp"

namespace forestinv {

struct TerrainLaw {
  enum class Kind { Flat, Slope, Undulating };

  Kind kind = Kind::Flat;
  double base_z = 0.0;
  double slope_x = 0.0;  // dz/dx for Slope
  double slope_y = 0.0;
  double amplitude = 0.5;   // for Undulating
  double wavelength = 18.0;

  double height_at(double x, double y) const;
};

struct SyntheticForestSpec {
  uint64_t seed = 1;

  // plot
  double extent_x = 50.0;
  double extent_y = 50.0;
  int tree_count = 50;
  double min_spacing = 2.5;
  TerrainLaw terrain;

  // stems
  double base_radius_min = 0.10;
  double base_radius_max = 0.22;
  double taper_rate = 0.012;  // radius loss per meter of height
  double lean_sigma_deg = 1.5;
  double stem_height_min = 7.0;
  double stem_height_max = 11.0;

  // contamination
  double noise_sigma = 0.01;
  double outlier_fraction = 0.10;  // per-tree clutter relative to stem points
  double whorl_spacing = 1.4;      // branch whorl interval along the stem (0 = off)

  // trajectory (lawnmower)
  double row_spacing = 8.0;
  double speed = 1.0;        // m/s
  double frame_rate = 10.0;  // Hz
  double margin = 3.0;
  double sensor_height = 1.2;

  // sensor model
  double sensor_range = 15.0;
  double vertical_fov_deg = 15.0;  // half-aperture
  double visible_arc_deg = 140.0;  // stem surface arc seen from one viewpoint
  int terrain_points_per_frame = 200;
  int stem_points_per_frame = 55;  // per visible tree, scaled by distance
  int canopy_points_per_frame = 10;

  // odometry drift, reset at every loop closure
  bool enable_drift = true;
  double drift_translation_per_m = 0.0015;
  double drift_yaw_deg_per_m = 0.008;
  double loop_closure_interval = 120.0;  // meters of path per correction batch
};

struct SyntheticScene {
  std::vector<ScanFrame> frames;  // sensor_pose carries the drifted odometry
  std::vector<StampedTransform> true_trajectory;
  std::vector<StampedTransform> drifted_trajectory;
  std::vector<LoopClosureEvent> loop_closures;  // absolute corrected poses
  std::vector<GroundTruthTree> ground_truth;
  TerrainLaw terrain;
  double speed = 1.0;
};

SyntheticScene generate_scene(const SyntheticForestSpec& spec);

// --- brute-force oracles -----------------------------------------------------

/// Exhaustive inlier-count circle search over a (cx, cy, r) grid, refined by
/// a Bullock fit on the winning inliers.
Circle2D brute_force_circle(const std::vector<Vec2>& points, double grid_step, double r_min,
                            double r_max, double inlier_band);

/// Quadratic-time exact nearest-axis assignment (same rules as
/// voronoi_assign: maximum distance 3 r + extra, ties to the lower index).
std::vector<std::vector<int>> brute_force_nearest_axis(const PointCloud& points,
                                                       const std::vector<AxisCandidate>& axes,
                                                       double assign_extra);

// --- contaminated slice suite for the fitter benchmark ----------------------

struct SliceSuiteSpec {
  uint64_t seed = 7;
  int slice_count = 500;
  double radius_min = 0.08;
  double radius_max = 0.30;
  double noise_min = 0.008;
  double noise_max = 0.014;
  double arc_min_deg = 190.0;  // gated trees are observed from at least a half circle
  double arc_max_deg = 360.0;
  double bark_fraction = 0.50;      // ring points just outside the stem surface
  double bark_band_min = 1.08;      // ... between these radius factors
  double bark_band_max = 1.30;
  double clutter_fraction = 0.35;
  double branch_probability = 0.5;
  double branch_distance_min = 1.6;  // blob center, in radius factors
  double branch_distance_max = 2.6;
  int stem_points_min = 80;
  int stem_points_max = 200;
};

struct BenchSlice {
  Slice2D slice;
  Circle2D truth;
};

std::vector<BenchSlice> generate_slice_suite(const SliceSuiteSpec& spec);

}  // namespace forestinv
