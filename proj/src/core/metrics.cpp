#include "core/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace forestinv {

namespace {

double xy_distance(const Vec3& a, const Vec3& b) {
  return std::hypot(a.x() - b.x(), a.y() - b.y());
}

/// Linear interpolation of a stem curve at `height`; nothing outside the
/// curve's height range.
std::optional<StemCurveSample> interpolate_curve(const std::vector<StemCurveSample>& curve,
                                                 double height) {
  if (curve.empty() || height < curve.front().height - 1e-9 ||
      height > curve.back().height + 1e-9) {
    return std::nullopt;
  }
  if (curve.size() == 1) {
    return std::abs(height - curve.front().height) <= 1e-9
               ? std::optional<StemCurveSample>(curve.front())
               : std::nullopt;
  }
  for (size_t i = 0; i + 1 < curve.size(); ++i) {
    const auto& a = curve[i];
    const auto& b = curve[i + 1];
    if (height >= a.height - 1e-9 && height <= b.height + 1e-9) {
      const double span = b.height - a.height;
      const double f = span > 0 ? std::clamp((height - a.height) / span, 0.0, 1.0) : 0.0;
      StemCurveSample s;
      s.height = height;
      s.center_x = (1 - f) * a.center_x + f * b.center_x;
      s.center_y = (1 - f) * a.center_y + f * b.center_y;
      s.diameter = (1 - f) * a.diameter + f * b.diameter;
      return s;
    }
  }
  return std::nullopt;
}

}  // namespace

std::vector<TreeMatch> match_trees(const std::vector<EstimatedTree>& estimates,
                                   const std::vector<GroundTruthTree>& truth, double max_dist) {
  struct Pair {
    double d;
    int e;
    int t;
  };
  std::vector<Pair> pairs;
  for (size_t e = 0; e < estimates.size(); ++e) {
    for (size_t t = 0; t < truth.size(); ++t) {
      const double d = xy_distance(estimates[e].base, truth[t].base);
      if (d <= max_dist) {
        pairs.push_back({d, static_cast<int>(e), static_cast<int>(t)});
      }
    }
  }
  std::sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) {
    if (a.d != b.d) {
      return a.d < b.d;
    }
    if (a.t != b.t) {
      return a.t < b.t;
    }
    return a.e < b.e;
  });
  std::vector<char> e_used(estimates.size(), 0), t_used(truth.size(), 0);
  std::vector<TreeMatch> matches;
  for (const auto& p : pairs) {
    if (e_used[p.e] || t_used[p.t]) {
      continue;
    }
    e_used[p.e] = 1;
    t_used[p.t] = 1;
    matches.push_back({p.e, p.t, p.d});
  }
  return matches;
}

std::optional<DbhStats> dbh_stats(const std::vector<TreeMatch>& matches,
                                  const std::vector<EstimatedTree>& estimates,
                                  const std::vector<GroundTruthTree>& truth) {
  std::vector<double> errors;
  for (const auto& m : matches) {
    const auto& est = estimates[m.estimate_index];
    const auto& gt = truth[m.truth_index];
    if (est.dbh && gt.dbh > 0.0) {
      errors.push_back(*est.dbh - gt.dbh);
    }
  }
  if (errors.empty()) {
    return std::nullopt;
  }
  DbhStats stats;
  stats.count = static_cast<int>(errors.size());
  double sum = 0.0, sq = 0.0;
  for (double e : errors) {
    sum += e;
    sq += e * e;
  }
  const double n = static_cast<double>(errors.size());
  stats.bias = sum / n;
  stats.rmse = std::sqrt(sq / n);
  double var = 0.0;
  for (double e : errors) {
    var += (e - stats.bias) * (e - stats.bias);
  }
  stats.std_dev = std::sqrt(var / n);
  return stats;
}

StemCurveError stem_curve_rmse(const std::vector<TreeMatch>& matches,
                               const std::vector<EstimatedTree>& estimates,
                               const std::vector<GroundTruthTree>& truth) {
  StemCurveError error;
  double diameter_sq = 0.0;
  double center_sq = 0.0;
  for (const auto& m : matches) {
    const auto& est = estimates[m.estimate_index];
    const auto& gt = truth[m.truth_index];
    int used = 0;
    for (const auto& sample : est.stem_curve) {
      const auto ref = interpolate_curve(gt.stem_curve, sample.height);
      if (!ref) {
        continue;
      }
      const double de = sample.diameter - ref->diameter;
      const double ce = std::hypot(sample.center_x - ref->center_x,
                                   sample.center_y - ref->center_y);
      diameter_sq += de * de;
      center_sq += ce * ce;
      ++error.slice_count;
      ++used;
    }
    if (used == 0 && !est.stem_curve.empty()) {
      ++error.excluded_trees;
    }
  }
  if (error.slice_count > 0) {
    error.diameter_rmse = std::sqrt(diameter_sq / error.slice_count);
    error.center_rmse = std::sqrt(center_sq / error.slice_count);
  }
  return error;
}

std::optional<double> tree_diameter_rmse(const std::vector<StemCurveSample>& estimate_curve,
                                         const std::vector<StemCurveSample>& truth_curve) {
  double sq = 0.0;
  int count = 0;
  for (const auto& sample : estimate_curve) {
    const auto ref = interpolate_curve(truth_curve, sample.height);
    if (!ref) {
      continue;
    }
    const double de = sample.diameter - ref->diameter;
    sq += de * de;
    ++count;
  }
  if (count == 0) {
    return std::nullopt;
  }
  return std::sqrt(sq / count);
}

EvalReport evaluate(const std::vector<EstimatedTree>& estimates,
                    const std::vector<GroundTruthTree>& truth, double max_dist) {
  EvalReport report;
  report.truth_count = static_cast<int>(truth.size());
  report.estimate_count = static_cast<int>(estimates.size());
  report.matches = match_trees(estimates, truth, max_dist);
  report.matched_count = static_cast<int>(report.matches.size());
  report.recall =
      truth.empty() ? 1.0 : static_cast<double>(report.matched_count) / truth.size();
  report.dbh = dbh_stats(report.matches, estimates, truth);
  report.stem_curve = stem_curve_rmse(report.matches, estimates, truth);

  double est_height = 0.0, gt_height = 0.0;
  int height_count = 0;
  for (const auto& m : report.matches) {
    est_height += estimates[m.estimate_index].reconstructed_stem_height;
    gt_height += truth[m.truth_index].height;
    ++height_count;
  }
  if (height_count > 0) {
    report.mean_reconstructed_height = est_height / height_count;
    report.mean_truth_height = gt_height / height_count;
  }
  return report;
}

std::string format_report_table(const EvalReport& report) {
  std::ostringstream os;
  char line[128];
  os << "metric                        value\n";
  os << "---------------------------------------\n";
  std::snprintf(line, sizeof(line), "%-28s %6.1f %%\n", "Detection Recall",
                100.0 * report.recall);
  os << line;
  if (report.dbh) {
    std::snprintf(line, sizeof(line), "%-28s %6.2f cm\n", "DBH RMSE", 100.0 * report.dbh->rmse);
    os << line;
    std::snprintf(line, sizeof(line), "%-28s %6.2f cm\n", "DBH Bias", 100.0 * report.dbh->bias);
    os << line;
    std::snprintf(line, sizeof(line), "%-28s %6.2f cm\n", "DBH Std", 100.0 * report.dbh->std_dev);
    os << line;
  } else {
    os << "DBH                          (no matched estimates)\n";
  }
  std::snprintf(line, sizeof(line), "%-28s %6.2f cm\n", "RMSE Stem Diameter",
                100.0 * report.stem_curve.diameter_rmse);
  os << line;
  std::snprintf(line, sizeof(line), "%-28s %6.2f cm\n", "RMSE Stem Center",
                100.0 * report.stem_curve.center_rmse);
  os << line;
  std::snprintf(line, sizeof(line), "%-28s %6.2f m\n", "Mean Height (ours)",
                report.mean_reconstructed_height);
  os << line;
  std::snprintf(line, sizeof(line), "%-28s %6.2f m\n", "Mean Height (reference)",
                report.mean_truth_height);
  os << line;
  std::snprintf(line, sizeof(line), "%-28s %d / %d matched (%d estimates)\n", "Trees",
                report.matched_count, report.truth_count, report.estimate_count);
  os << line;
  return os.str();
}

}  // namespace forestinv
