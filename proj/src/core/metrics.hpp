// Evaluation against ground truth: detection recall, DBH error statistics,
// and stem-curve diameter/center errors.

#pragma once

#include <optional>
#include <string>
#include <vector>

#include "core/geometry.hpp"
#include "core/reconstruction.hpp"

namespace forestinv {

struct GroundTruthTree {
  int id = 0;
  Vec3 base = Vec3::Zero();  // map frame
  double dbh = 0.0;
  std::vector<StemCurveSample> stem_curve;  // heights above ground, increasing
  double height = 0.0;
};

struct EstimatedTree {
  int id = 0;
  Vec3 base = Vec3::Zero();
  std::optional<double> dbh;
  std::vector<StemCurveSample> stem_curve;
  double tree_height = 0.0;
  double reconstructed_stem_height = 0.0;
  double coverage_angle = 0.0;
  int cluster_count = 0;
};

struct TreeMatch {
  int estimate_index = -1;
  int truth_index = -1;
  double distance = 0.0;
};

/// Greedy mutual-nearest matching on base positions (x-y) within max_dist.
std::vector<TreeMatch> match_trees(const std::vector<EstimatedTree>& estimates,
                                   const std::vector<GroundTruthTree>& truth, double max_dist);

struct DbhStats {
  double rmse = 0.0;
  double bias = 0.0;
  double std_dev = 0.0;  // population convention, so rmse² = bias² + std²
  int count = 0;
};

/// Error statistics over e = estimate − truth for matches where both DBH
/// values exist. Nothing when no such match exists.
std::optional<DbhStats> dbh_stats(const std::vector<TreeMatch>& matches,
                                  const std::vector<EstimatedTree>& estimates,
                                  const std::vector<GroundTruthTree>& truth);

struct StemCurveError {
  double diameter_rmse = 0.0;
  double center_rmse = 0.0;
  int slice_count = 0;
  int excluded_trees = 0;  // no overlapping height range
};

/// Truth curves are interpolated at each estimated circle height; errors are
/// pooled per slice over all matched trees.
StemCurveError stem_curve_rmse(const std::vector<TreeMatch>& matches,
                               const std::vector<EstimatedTree>& estimates,
                               const std::vector<GroundTruthTree>& truth);

/// Per-tree stem-diameter RMS error against the interpolated truth curve
/// (used by the coverage sweep). Nothing without height overlap.
std::optional<double> tree_diameter_rmse(const std::vector<StemCurveSample>& estimate_curve,
                                         const std::vector<StemCurveSample>& truth_curve);

struct EvalReport {
  double recall = 0.0;
  int truth_count = 0;
  int estimate_count = 0;
  int matched_count = 0;
  std::optional<DbhStats> dbh;
  StemCurveError stem_curve;
  double mean_reconstructed_height = 0.0;
  double mean_truth_height = 0.0;
  std::vector<TreeMatch> matches;
};

EvalReport evaluate(const std::vector<EstimatedTree>& estimates,
                    const std::vector<GroundTruthTree>& truth, double max_dist = 1.0);

/// Aligned-column text table mirroring the accuracy report layout.
std::string format_report_table(const EvalReport& report);

}  // namespace forestinv
