// Robust stem reconstruction: circle estimation per horizontal slice with a
// Randomized Hough Transform (votes = triplet circumcircles, mode found in an
// octree over Hough space), constrained stacking into oblique cone frustums,
// cluster alignment with Bullock least-squares refinement, canopy hulls and
// trait extraction. Includes the classical Hough and RANSAC baselines used
// by the fitter benchmark.

#pragma once

#include <optional>
#include <vector>

#include "core/geometry.hpp"
#include "core/hull.hpp"
#include "core/rng.hpp"
#include "core/terrain.hpp"

namespace forestinv {

struct ReconstructionConfig {
  double slice_spacing = 0.5;      // Δh between stacked circles
  double slice_thickness = 0.10;
  double vote_sphere_radius = 0.03;  // fixed sphere S in Hough space
  double r_min = 0.025;
  double r_max = 1.0;
  double center_drift = 0.15;   // allowed center motion per slice step
  double radius_drift = 0.05;   // allowed radius change per slice step
  int rht_iterations = 500;
  int min_votes = 15;           // surviving votes required for a fit
  double density_radius = 0.05;
  double inlier_band = 0.02;
  int max_slice_failures = 3;   // consecutive failures that end the stem
  double min_triplet_area = 1e-6;
  double min_triplet_separation = 0.06;  // closer point pairs make degenerate votes
  double canopy_min_height = 2.0;      // canopy points: above DTM by this
  double canopy_axis_diameters = 2.0;  // ... and this many diameters off axis
  int min_slice_points = 3;
  double hough_center_bin = 0.02;
  double hough_radius_bin = 0.01;
  int ransac_iterations = 500;
};

/// A point in Hough space: circle center and radius, all in meters.
struct HoughVote {
  double cx = 0.0;
  double cy = 0.0;
  double r = 0.0;

  Vec3 as_vec3() const { return {cx, cy, r}; }
};

struct CircleEstimate {
  enum class Source { RHT, LeastSquares, ClassicalHough, Ransac };

  Circle2D circle;
  int inlier_count = 0;
  double rms_residual = 0.0;
  Source source = Source::RHT;
};

/// 2D point set cut from a cluster at a given height.
struct Slice2D {
  std::vector<Vec2> points;
  double z_center = 0.0;
};

struct StemModel {
  std::vector<CircleEstimate> circles;  // strictly increasing heights on the Δh lattice
  double base_height = 0.0;             // terrain height at the stem
  std::optional<TriMesh> canopy_hull;

  size_t frustum_count() const { return circles.size() < 2 ? 0 : circles.size() - 1; }
};

struct StemCurveSample {
  double height = 0.0;  // above ground
  double center_x = 0.0;
  double center_y = 0.0;
  double diameter = 0.0;
};

struct TreeTraits {
  std::optional<double> dbh;  // empty when 1.3 m cannot be bracketed or extrapolated
  std::vector<StemCurveSample> stem_curve;
  double tree_height = 0.0;
  double reconstructed_stem_height = 0.0;
};

// --- circle fitting primitives ---------------------------------------------

/// Circumcircle through three points; nothing when near-collinear.
std::optional<HoughVote> circumcircle(const Vec2& a, const Vec2& b, const Vec2& c,
                                      double min_area);

/// Per-point weights proportional to the neighbor count within `radius`
/// (including the point itself), normalized to sum 1.
std::vector<double> density_weights(const std::vector<Vec2>& points, double radius);

/// Draws a density-weighted triplet and returns its circumcircle as a vote,
/// or nothing if the triplet is degenerate or the radius is out of bounds.
/// `cumulative` holds inclusive prefix sums of the density weights.
std::optional<HoughVote> sample_triplet_circle(const std::vector<Vec2>& points,
                                               const std::vector<double>& cumulative, Rng& rng,
                                               const ReconstructionConfig& cfg);

/// Randomized Hough Transform circle fit. Votes violating the constraint
/// bounds relative to `constraint` are discarded; the returned circle is the
/// mean of the densest vote-sphere neighborhood.
std::optional<CircleEstimate> rht_fit(const Slice2D& slice, const ReconstructionConfig& cfg,
                                      Rng& rng, const Circle2D* constraint = nullptr);

/// Rasterized accumulator over (cx, cy, r); benchmark baseline.
std::optional<CircleEstimate> classical_hough_fit(const Slice2D& slice,
                                                  const ReconstructionConfig& cfg);

/// Best-inlier-count triplet circle; `weighted` switches to density-weighted
/// sampling (the RANSAC* variant).
std::optional<CircleEstimate> ransac_fit(const Slice2D& slice, const ReconstructionConfig& cfg,
                                         Rng& rng, bool weighted);

/// Bullock's algebraic least-squares circle (centroid-shifted normal
/// equations). Exact on consistent input; nothing for < 3 points or a
/// singular system.
std::optional<Circle2D> bullock_fit(const std::vector<Vec2>& points);

// --- stem assembly ----------------------------------------------------------

/// One observation of a tree, expressed in the map frame.
struct MapCluster {
  PointCloud cloud;      // map frame
  Vec3 sensor_position;  // map frame
};

/// Seed circle from unconstrained fits on the three lowest fittable slices:
/// the mutually consistent pair/triple with the highest total inlier count
/// wins and its lowest circle is returned.
std::optional<Circle2D> nms_initialize(const std::vector<CircleEstimate>& lowest_fits,
                                       const std::vector<int>& slice_indices,
                                       const ReconstructionConfig& cfg);

/// Aligns per-cluster slices so their RHT circle centers coincide with the
/// inlier-weighted mean center, merges them, and refines with a Bullock fit
/// over the merged inlier band. Falls back to the aligned RHT circle when
/// fewer than 3 merged inliers survive.
CircleEstimate align_and_refine(const std::vector<Slice2D>& cluster_slices,
                                const std::vector<CircleEstimate>& cluster_circles,
                                const ReconstructionConfig& cfg);

struct ReconstructionDiagnostics {
  int slices_attempted = 0;
  int slices_accepted = 0;
  int votes_generated = 0;
  bool init_failed = false;
};

/// Full per-tree reconstruction from the instance's clusters. Returns nothing
/// when initialization fails or the terrain does not cover the stem base.
std::optional<StemModel> reconstruct_stem(const std::vector<MapCluster>& clusters,
                                          const Vec2& stem_xy, const GlobalDTM& terrain,
                                          const ReconstructionConfig& cfg, uint64_t seed,
                                          ReconstructionDiagnostics* diag = nullptr);

/// Convex hull over the canopy point selection (above the terrain by the
/// configured clearance and away from the stem axis).
std::optional<TriMesh> canopy_hull(const std::vector<MapCluster>& clusters, const StemModel& stem,
                                   const GlobalDTM& terrain, const ReconstructionConfig& cfg);

/// DBH (interpolated at 1.3 m above ground, extrapolated from the lowest
/// frustum when below the first circle), the stem curve re-expressed as
/// heights above ground, and the height traits.
TreeTraits extract_traits(const StemModel& stem, double max_point_z);

}  // namespace forestinv
