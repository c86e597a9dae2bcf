#include "core/reconstruction.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_map>

#include "core/spatial.hpp"

namespace forestinv {

namespace {

double point_circle_residual(const Vec2& p, double cx, double cy, double r) {
  return std::hypot(p.x() - cx, p.y() - cy) - r;
}

struct InlierStats {
  int count = 0;
  double rms = 0.0;
};

InlierStats inlier_stats(const std::vector<Vec2>& points, double cx, double cy, double r,
                         double band) {
  InlierStats s;
  double sq = 0.0;
  for (const auto& p : points) {
    const double res = point_circle_residual(p, cx, cy, r);
    if (std::abs(res) <= band) {
      ++s.count;
      sq += res * res;
    }
  }
  s.rms = s.count > 0 ? std::sqrt(sq / s.count) : 0.0;
  return s;
}

// Minimal 2D hash grid for fixed-radius neighbor counting. Cells are keyed
// by their integer coordinates (packed injectively into 64 bits).
class Grid2D {
 public:
  Grid2D(const std::vector<Vec2>& points, double radius)
      : points_(points), r2_(radius * radius), inv_cell_(1.0 / radius) {
    cells_.reserve(points.size());
    for (size_t i = 0; i < points.size(); ++i) {
      cells_[key(points[i])].push_back(static_cast<int>(i));
    }
  }

  int count(const Vec2& q) const {
    int n = 0;
    const int64_t cx = coord(q.x());
    const int64_t cy = coord(q.y());
    for (int64_t dx = -1; dx <= 1; ++dx) {
      for (int64_t dy = -1; dy <= 1; ++dy) {
        auto it = cells_.find(pack(cx + dx, cy + dy));
        if (it == cells_.end()) {
          continue;
        }
        for (int i : it->second) {
          if ((points_[i] - q).squaredNorm() <= r2_) {
            ++n;
          }
        }
      }
    }
    return n;
  }

 private:
  int64_t coord(double v) const { return static_cast<int64_t>(std::floor(v * inv_cell_)); }
  static uint64_t pack(int64_t x, int64_t y) {
    return (static_cast<uint64_t>(static_cast<uint32_t>(x)) << 32) |
           static_cast<uint64_t>(static_cast<uint32_t>(y));
  }
  uint64_t key(const Vec2& p) const { return pack(coord(p.x()), coord(p.y())); }

  const std::vector<Vec2>& points_;
  double r2_;
  double inv_cell_;
  std::unordered_map<uint64_t, std::vector<int>> cells_;
};

}  // namespace

std::optional<HoughVote> circumcircle(const Vec2& a, const Vec2& b, const Vec2& c,
                                      double min_area) {
  const double area = 0.5 * std::abs((b.x() - a.x()) * (c.y() - a.y()) -
                                     (c.x() - a.x()) * (b.y() - a.y()));
  if (area < min_area) {
    return std::nullopt;
  }
  // shift to the triangle centroid for conditioning
  const Vec2 g = (a + b + c) / 3.0;
  const Vec2 pa = a - g, pb = b - g, pc = c - g;
  const double d = 2.0 * (pa.x() * (pb.y() - pc.y()) + pb.x() * (pc.y() - pa.y()) +
                          pc.x() * (pa.y() - pb.y()));
  if (d == 0.0) {
    return std::nullopt;
  }
  const double na = pa.squaredNorm(), nb = pb.squaredNorm(), nc = pc.squaredNorm();
  const double ux = (na * (pb.y() - pc.y()) + nb * (pc.y() - pa.y()) + nc * (pa.y() - pb.y())) / d;
  const double uy = (na * (pc.x() - pb.x()) + nb * (pa.x() - pc.x()) + nc * (pb.x() - pa.x())) / d;
  HoughVote vote;
  vote.cx = ux + g.x();
  vote.cy = uy + g.y();
  vote.r = std::hypot(pa.x() - ux, pa.y() - uy);
  return vote;
}

std::vector<double> density_weights(const std::vector<Vec2>& points, double radius) {
  if (!(radius > 0.0)) {
    throw invalid_argument_error("density_weights: radius must be > 0");
  }
  std::vector<double> weights(points.size(), 0.0);
  if (points.empty()) {
    return weights;
  }
  Grid2D grid(points, radius);
  double total = 0.0;
  for (size_t i = 0; i < points.size(); ++i) {
    weights[i] = static_cast<double>(grid.count(points[i]));
    total += weights[i];
  }
  for (auto& w : weights) {
    w /= total;
  }
  return weights;
}

std::optional<HoughVote> sample_triplet_circle(const std::vector<Vec2>& points,
                                               const std::vector<double>& cumulative, Rng& rng,
                                               const ReconstructionConfig& cfg) {
  if (points.size() < 3) {
    return std::nullopt;
  }
  size_t i = 0, j = 0, k = 0;
  const double sep2 = cfg.min_triplet_separation * cfg.min_triplet_separation;
  bool found = false;
  for (int attempt = 0; attempt < 16 && !found; ++attempt) {
    i = rng.weighted_index(cumulative);
    j = rng.weighted_index(cumulative);
    k = rng.weighted_index(cumulative);
    found = i != j && j != k && i != k &&
            (points[i] - points[j]).squaredNorm() >= sep2 &&
            (points[j] - points[k]).squaredNorm() >= sep2 &&
            (points[i] - points[k]).squaredNorm() >= sep2;
  }
  if (!found) {
    return std::nullopt;
  }
  auto vote = circumcircle(points[i], points[j], points[k], cfg.min_triplet_area);
  if (!vote || vote->r < cfg.r_min || vote->r > cfg.r_max) {
    return std::nullopt;
  }
  return vote;
}

std::optional<CircleEstimate> rht_fit(const Slice2D& slice, const ReconstructionConfig& cfg,
                                      Rng& rng, const Circle2D* constraint) {
  const auto& points = slice.points;
  if (static_cast<int>(points.size()) < std::max(3, cfg.min_slice_points) ||
      cfg.rht_iterations < 1) {
    return std::nullopt;
  }

  const std::vector<double> weights = density_weights(points, cfg.density_radius);
  std::vector<double> cumulative(weights.size());
  double acc = 0.0;
  for (size_t i = 0; i < weights.size(); ++i) {
    acc += weights[i];
    cumulative[i] = acc;
  }

  std::vector<Vec3> votes;
  votes.reserve(cfg.rht_iterations);
  for (int it = 0; it < cfg.rht_iterations; ++it) {
    auto vote = sample_triplet_circle(points, cumulative, rng, cfg);
    if (!vote) {
      continue;
    }
    if (constraint) {
      const double center_dist = std::hypot(vote->cx - constraint->cx, vote->cy - constraint->cy);
      if (center_dist > cfg.center_drift ||
          std::abs(vote->r - constraint->radius) > cfg.radius_drift) {
        continue;
      }
    }
    votes.push_back(vote->as_vec3());
  }
  if (static_cast<int>(votes.size()) < cfg.min_votes) {
    return std::nullopt;
  }

  // Mode of the vote cloud: most neighbors within the fixed sphere. Ties
  // resolve to the neighborhood with the smallest mean radius, which
  // counteracts the large-circle bias of plain inlier counting.
  Octree octree(votes);
  size_t best_index = 0;
  size_t best_count = 0;
  double best_mean_r = std::numeric_limits<double>::infinity();
  for (size_t v = 0; v < votes.size(); ++v) {
    const size_t count = octree.radius_count(votes[v], cfg.vote_sphere_radius);
    if (count < best_count) {
      continue;
    }
    if (count > best_count) {
      best_count = count;
      best_index = v;
      best_mean_r = -1.0;  // lazily computed below on demand
      continue;
    }
    // tie: compare neighborhood mean radii
    if (best_mean_r < 0.0) {
      const auto n = octree.radius_query(votes[best_index], cfg.vote_sphere_radius);
      double sum = 0.0;
      for (int idx : n) {
        sum += votes[idx].z();
      }
      best_mean_r = sum / static_cast<double>(n.size());
    }
    const auto n = octree.radius_query(votes[v], cfg.vote_sphere_radius);
    double sum = 0.0;
    for (int idx : n) {
      sum += votes[idx].z();
    }
    const double mean_r = sum / static_cast<double>(n.size());
    if (mean_r < best_mean_r) {
      best_mean_r = mean_r;
      best_index = v;
    }
  }

  const auto neighborhood = octree.radius_query(votes[best_index], cfg.vote_sphere_radius);
  Vec3 mean = Vec3::Zero();
  for (int idx : neighborhood) {
    mean += votes[idx];
  }
  mean /= static_cast<double>(neighborhood.size());

  CircleEstimate estimate;
  estimate.circle = {mean.x(), mean.y(), mean.z(), slice.z_center};
  estimate.source = CircleEstimate::Source::RHT;
  const InlierStats st = inlier_stats(points, mean.x(), mean.y(), mean.z(), cfg.inlier_band);
  estimate.inlier_count = st.count;
  estimate.rms_residual = st.rms;
  if (estimate.inlier_count < 3) {
    return std::nullopt;
  }
  return estimate;
}

std::optional<CircleEstimate> classical_hough_fit(const Slice2D& slice,
                                                  const ReconstructionConfig& cfg) {
  const auto& points = slice.points;
  if (points.size() < 3) {
    return std::nullopt;
  }
  Vec2 lo = points[0], hi = points[0];
  for (const auto& p : points) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  const double pad = 0.5 * cfg.r_max;
  const double x0 = lo.x() - pad, x1 = hi.x() + pad;
  const double y0 = lo.y() - pad, y1 = hi.y() + pad;
  const int ncx = std::max(1, static_cast<int>(std::ceil((x1 - x0) / cfg.hough_center_bin)));
  const int ncy = std::max(1, static_cast<int>(std::ceil((y1 - y0) / cfg.hough_center_bin)));
  const int nr = std::max(1, static_cast<int>(std::ceil((cfg.r_max - cfg.r_min) /
                                                        cfg.hough_radius_bin)));

  // Sweep center bins and histogram the per-point radii; only one radius row
  // is held at a time, so the accumulator never materializes in full.
  std::vector<int> radius_hist(nr);
  int best_votes = -1;
  int best_ix = 0, best_iy = 0, best_ir = 0;
  for (int iy = 0; iy < ncy; ++iy) {
    const double cy = y0 + (iy + 0.5) * cfg.hough_center_bin;
    for (int ix = 0; ix < ncx; ++ix) {
      const double cx = x0 + (ix + 0.5) * cfg.hough_center_bin;
      std::fill(radius_hist.begin(), radius_hist.end(), 0);
      for (const auto& p : points) {
        const double r = std::hypot(p.x() - cx, p.y() - cy);
        const int ir = static_cast<int>((r - cfg.r_min) / cfg.hough_radius_bin);
        if (ir >= 0 && ir < nr) {
          radius_hist[ir] += 1;
        }
      }
      for (int ir = 0; ir < nr; ++ir) {
        if (radius_hist[ir] > best_votes) {
          best_votes = radius_hist[ir];
          best_ix = ix;
          best_iy = iy;
          best_ir = ir;
        }
      }
    }
  }
  if (best_votes < 3) {
    return std::nullopt;
  }
  CircleEstimate estimate;
  estimate.circle = {x0 + (best_ix + 0.5) * cfg.hough_center_bin,
                     y0 + (best_iy + 0.5) * cfg.hough_center_bin,
                     cfg.r_min + (best_ir + 0.5) * cfg.hough_radius_bin, slice.z_center};
  estimate.source = CircleEstimate::Source::ClassicalHough;
  const InlierStats st = inlier_stats(points, estimate.circle.cx, estimate.circle.cy,
                                      estimate.circle.radius, cfg.inlier_band);
  estimate.inlier_count = st.count;
  estimate.rms_residual = st.rms;
  if (estimate.inlier_count < 3) {
    return std::nullopt;
  }
  return estimate;
}

std::optional<CircleEstimate> ransac_fit(const Slice2D& slice, const ReconstructionConfig& cfg,
                                         Rng& rng, bool weighted) {
  const auto& points = slice.points;
  if (points.size() < 3 || cfg.ransac_iterations < 1) {
    return std::nullopt;
  }
  std::vector<double> cumulative(points.size());
  if (weighted) {
    const std::vector<double> weights = density_weights(points, cfg.density_radius);
    double acc = 0.0;
    for (size_t i = 0; i < weights.size(); ++i) {
      acc += weights[i];
      cumulative[i] = acc;
    }
  } else {
    for (size_t i = 0; i < points.size(); ++i) {
      cumulative[i] = static_cast<double>(i + 1);
    }
  }

  std::optional<HoughVote> best;
  int best_count = 2;  // require at least 3 inliers
  for (int it = 0; it < cfg.ransac_iterations; ++it) {
    auto vote = sample_triplet_circle(points, cumulative, rng, cfg);
    if (!vote) {
      continue;
    }
    int count = 0;
    for (const auto& p : points) {
      if (std::abs(point_circle_residual(p, vote->cx, vote->cy, vote->r)) <= cfg.inlier_band) {
        ++count;
      }
    }
    if (count > best_count) {
      best_count = count;
      best = vote;
    }
  }
  if (!best) {
    return std::nullopt;
  }
  CircleEstimate estimate;
  estimate.circle = {best->cx, best->cy, best->r, slice.z_center};
  estimate.source = CircleEstimate::Source::Ransac;
  const InlierStats st =
      inlier_stats(points, best->cx, best->cy, best->r, cfg.inlier_band);
  estimate.inlier_count = st.count;
  estimate.rms_residual = st.rms;
  return estimate;
}

std::optional<Circle2D> bullock_fit(const std::vector<Vec2>& points) {
  const size_t n = points.size();
  if (n < 3) {
    return std::nullopt;
  }
  Vec2 mean = Vec2::Zero();
  for (const auto& p : points) {
    mean += p;
  }
  mean /= static_cast<double>(n);

  double suu = 0, svv = 0, suv = 0, suuu = 0, svvv = 0, suvv = 0, svuu = 0;
  for (const auto& p : points) {
    const double u = p.x() - mean.x();
    const double v = p.y() - mean.y();
    suu += u * u;
    svv += v * v;
    suv += u * v;
    suuu += u * u * u;
    svvv += v * v * v;
    suvv += u * v * v;
    svuu += v * u * u;
  }
  const double det = suu * svv - suv * suv;
  if (std::abs(det) < 1e-15 * (suu + svv) * (suu + svv)) {
    return std::nullopt;
  }
  const double rhs_u = 0.5 * (suuu + suvv);
  const double rhs_v = 0.5 * (svvv + svuu);
  const double uc = (rhs_u * svv - rhs_v * suv) / det;
  const double vc = (rhs_v * suu - rhs_u * suv) / det;
  const double r2 = uc * uc + vc * vc + (suu + svv) / static_cast<double>(n);
  if (!(r2 > 0.0)) {
    return std::nullopt;
  }
  Circle2D circle;
  circle.cx = uc + mean.x();
  circle.cy = vc + mean.y();
  circle.radius = std::sqrt(r2);
  return circle;
}

std::optional<Circle2D> nms_initialize(const std::vector<CircleEstimate>& lowest_fits,
                                       const std::vector<int>& slice_indices,
                                       const ReconstructionConfig& cfg) {
  const size_t n = lowest_fits.size();
  if (n < 2) {
    return std::nullopt;
  }
  const auto consistent = [&](size_t i, size_t j) {
    const double gap = std::max(1, std::abs(slice_indices[i] - slice_indices[j]));
    const auto& a = lowest_fits[i].circle;
    const auto& b = lowest_fits[j].circle;
    return std::hypot(a.cx - b.cx, a.cy - b.cy) <= cfg.center_drift * gap &&
           std::abs(a.radius - b.radius) <= cfg.radius_drift * gap;
  };

  // Enumerate pairs and the full triple; pick the consistent subset with the
  // highest total inlier count.
  std::vector<std::vector<size_t>> subsets;
  if (n >= 3 && consistent(0, 1) && consistent(0, 2) && consistent(1, 2)) {
    subsets.push_back({0, 1, 2});
  }
  for (size_t i = 0; i < n; ++i) {
    for (size_t j = i + 1; j < n; ++j) {
      if (consistent(i, j)) {
        subsets.push_back({i, j});
      }
    }
  }
  if (subsets.empty()) {
    return std::nullopt;
  }
  const auto total_inliers = [&](const std::vector<size_t>& s) {
    int sum = 0;
    for (size_t i : s) {
      sum += lowest_fits[i].inlier_count;
    }
    return sum;
  };
  size_t best = 0;
  for (size_t s = 1; s < subsets.size(); ++s) {
    if (total_inliers(subsets[s]) > total_inliers(subsets[best])) {
      best = s;
    }
  }
  // lowest circle of the winning subset
  size_t lowest = subsets[best][0];
  for (size_t i : subsets[best]) {
    if (lowest_fits[i].circle.height_z < lowest_fits[lowest].circle.height_z) {
      lowest = i;
    }
  }
  return lowest_fits[lowest].circle;
}

CircleEstimate align_and_refine(const std::vector<Slice2D>& cluster_slices,
                                const std::vector<CircleEstimate>& cluster_circles,
                                const ReconstructionConfig& cfg) {
  if (cluster_slices.empty() || cluster_slices.size() != cluster_circles.size()) {
    throw invalid_argument_error("align_and_refine: need one circle per cluster slice");
  }
  double wsum = 0.0;
  Vec2 mean_center = Vec2::Zero();
  double mean_r = 0.0;
  for (const auto& c : cluster_circles) {
    const double w = std::max(1, c.inlier_count);
    mean_center += w * Vec2(c.circle.cx, c.circle.cy);
    mean_r += w * c.circle.radius;
    wsum += w;
  }
  mean_center /= wsum;
  mean_r /= wsum;

  // Translate every cluster slice so its own circle center lands on the
  // weighted mean center, then merge.
  std::vector<Vec2> merged;
  for (size_t i = 0; i < cluster_slices.size(); ++i) {
    const Vec2 offset =
        mean_center - Vec2(cluster_circles[i].circle.cx, cluster_circles[i].circle.cy);
    for (const auto& p : cluster_slices[i].points) {
      merged.push_back(p + offset);
    }
  }

  std::vector<Vec2> band_inliers;
  for (const auto& p : merged) {
    if (std::abs(point_circle_residual(p, mean_center.x(), mean_center.y(), mean_r)) <=
        cfg.inlier_band) {
      band_inliers.push_back(p);
    }
  }

  CircleEstimate out;
  out.circle = {mean_center.x(), mean_center.y(), mean_r, cluster_slices[0].z_center};
  out.source = CircleEstimate::Source::RHT;
  if (band_inliers.size() >= 3) {
    if (auto refined = bullock_fit(band_inliers)) {
      out.circle.cx = refined->cx;
      out.circle.cy = refined->cy;
      out.circle.radius = refined->radius;
      out.source = CircleEstimate::Source::LeastSquares;
    }
  }
  const InlierStats st = [&] {
    InlierStats s;
    double sq = 0.0;
    for (const auto& p : band_inliers) {
      const double res = point_circle_residual(p, out.circle.cx, out.circle.cy, out.circle.radius);
      ++s.count;
      sq += res * res;
    }
    s.rms = s.count > 0 ? std::sqrt(sq / s.count) : 0.0;
    return s;
  }();
  out.inlier_count = st.count;
  out.rms_residual = st.rms;
  return out;
}

namespace {

Slice2D cut_slice(const MapCluster& cluster, double z_center, double thickness) {
  Slice2D slice;
  slice.z_center = z_center;
  const double half = 0.5 * thickness;
  for (const auto& p : cluster.cloud.points) {
    if (std::abs(p.z() - z_center) <= half) {
      slice.points.emplace_back(p.x(), p.y());
    }
  }
  return slice;
}

}  // namespace

std::optional<StemModel> reconstruct_stem(const std::vector<MapCluster>& clusters,
                                          const Vec2& stem_xy, const GlobalDTM& terrain,
                                          const ReconstructionConfig& cfg, uint64_t seed,
                                          ReconstructionDiagnostics* diag) {
  ReconstructionDiagnostics local_diag;
  ReconstructionDiagnostics& d = diag ? *diag : local_diag;
  if (clusters.empty()) {
    return std::nullopt;
  }

  double base = 0.0;
  try {
    base = terrain_height_at(terrain, stem_xy.x(), stem_xy.y());
  } catch (const Error&) {
    return std::nullopt;  // terrain not covered yet: deferred
  }

  double max_z = -std::numeric_limits<double>::infinity();
  for (const auto& c : clusters) {
    for (const auto& p : c.cloud.points) {
      max_z = std::max(max_z, p.z());
    }
  }
  const auto slice_height = [&](int k) { return base + cfg.slice_spacing * (k + 1); };
  const int max_k =
      static_cast<int>(std::floor((max_z - base) / cfg.slice_spacing)) - 1;
  if (max_k < 0) {
    return std::nullopt;
  }

  // Initialization: unconstrained fits on the three lowest fittable slices
  // of the merged cloud, then the mutually consistent subset seeds the stack.
  std::vector<CircleEstimate> init_fits;
  std::vector<int> init_indices;
  int init_k = -1;
  for (int k = 0; k <= std::min(max_k, 8) && init_fits.size() < 3; ++k) {
    Slice2D merged;
    merged.z_center = slice_height(k);
    for (const auto& c : clusters) {
      const Slice2D s = cut_slice(c, merged.z_center, cfg.slice_thickness);
      merged.points.insert(merged.points.end(), s.points.begin(), s.points.end());
    }
    if (static_cast<int>(merged.points.size()) < cfg.min_slice_points) {
      continue;
    }
    Rng rng(mix_seed(seed, 0xC0FFEE, static_cast<uint64_t>(k)));
    if (auto fit = rht_fit(merged, cfg, rng, nullptr)) {
      init_fits.push_back(*fit);
      init_indices.push_back(k);
      if (init_k < 0) {
        init_k = k;
      }
    }
  }
  auto seed_circle = nms_initialize(init_fits, init_indices, cfg);
  if (!seed_circle) {
    d.init_failed = true;
    return std::nullopt;
  }
  // the stack starts at the seed's slice
  int start_k = 0;
  for (size_t i = 0; i < init_fits.size(); ++i) {
    if (init_fits[i].circle.height_z == seed_circle->height_z) {
      start_k = init_indices[i];
    }
  }

  StemModel model;
  model.base_height = base;

  Circle2D constraint = *seed_circle;
  int last_accepted_k = start_k - 1;
  int consecutive_failures = 0;
  for (int k = start_k; k <= max_k && consecutive_failures < cfg.max_slice_failures; ++k) {
    ++d.slices_attempted;
    const double h = slice_height(k);
    const int gap = std::max(1, k - last_accepted_k);
    ReconstructionConfig slice_cfg = cfg;
    slice_cfg.center_drift = cfg.center_drift * gap;
    slice_cfg.radius_drift = cfg.radius_drift * gap;

    std::vector<Slice2D> cluster_slices;
    std::vector<CircleEstimate> cluster_circles;
    for (size_t ci = 0; ci < clusters.size(); ++ci) {
      Slice2D s = cut_slice(clusters[ci], h, cfg.slice_thickness);
      if (static_cast<int>(s.points.size()) < cfg.min_slice_points) {
        continue;
      }
      Rng rng(mix_seed(seed, static_cast<uint64_t>(k + 1), ci));
      if (auto fit = rht_fit(s, slice_cfg, rng, &constraint)) {
        cluster_slices.push_back(std::move(s));
        cluster_circles.push_back(*fit);
      }
    }
    if (cluster_circles.empty()) {
      ++consecutive_failures;
      continue;
    }
    CircleEstimate accepted = align_and_refine(cluster_slices, cluster_circles, cfg);
    accepted.circle.height_z = h;
    model.circles.push_back(accepted);
    ++d.slices_accepted;
    constraint = accepted.circle;
    last_accepted_k = k;
    consecutive_failures = 0;
  }

  if (model.circles.size() < 2) {
    return std::nullopt;
  }
  model.canopy_hull = canopy_hull(clusters, model, terrain, cfg);
  return model;
}

std::optional<TriMesh> canopy_hull(const std::vector<MapCluster>& clusters, const StemModel& stem,
                                   const GlobalDTM& terrain, const ReconstructionConfig& cfg) {
  if (stem.circles.empty()) {
    return std::nullopt;
  }
  double mean_diameter = 0.0;
  for (const auto& c : stem.circles) {
    mean_diameter += 2.0 * c.circle.radius;
  }
  mean_diameter /= static_cast<double>(stem.circles.size());

  const auto axis_center_at = [&](double z) -> Vec2 {
    const auto& circles = stem.circles;
    if (z <= circles.front().circle.height_z) {
      return circles.front().circle.center();
    }
    if (z >= circles.back().circle.height_z) {
      return circles.back().circle.center();
    }
    for (size_t i = 0; i + 1 < circles.size(); ++i) {
      const double z0 = circles[i].circle.height_z;
      const double z1 = circles[i + 1].circle.height_z;
      if (z >= z0 && z <= z1) {
        const double f = (z - z0) / (z1 - z0);
        return (1.0 - f) * circles[i].circle.center() + f * circles[i + 1].circle.center();
      }
    }
    return circles.back().circle.center();
  };

  std::vector<Vec3> canopy;
  for (const auto& cluster : clusters) {
    for (const auto& p : cluster.cloud.points) {
      if (!terrain.covered(p.x(), p.y())) {
        continue;
      }
      const double ground = terrain_height_at(terrain, p.x(), p.y());
      if (p.z() - ground < cfg.canopy_min_height) {
        continue;
      }
      const Vec2 axis = axis_center_at(p.z());
      if (std::hypot(p.x() - axis.x(), p.y() - axis.y()) <
          cfg.canopy_axis_diameters * mean_diameter) {
        continue;
      }
      canopy.push_back(p);
    }
  }
  if (canopy.size() < 4) {
    return std::nullopt;
  }
  // hulls only need extreme points; thin out very dense canopies first
  if (canopy.size() > 20000) {
    PointCloud cloud;
    cloud.points = std::move(canopy);
    canopy = voxel_downsample(cloud, 0.1).points;
  }
  return convex_hull_3d(canopy);
}

TreeTraits extract_traits(const StemModel& stem, double max_point_z) {
  if (stem.circles.size() < 2) {
    throw invalid_argument_error("extract_traits: need at least 2 circles");
  }
  TreeTraits traits;
  const double base = stem.base_height;
  const double target = base + 1.3;

  const auto& circles = stem.circles;
  const auto diameter_at = [&](size_t i) { return 2.0 * circles[i].circle.radius; };

  if (target < circles.front().circle.height_z) {
    // below the first circle: extrapolate the lowest frustum
    const double z0 = circles[0].circle.height_z;
    const double z1 = circles[1].circle.height_z;
    const double d =
        diameter_at(0) + (diameter_at(1) - diameter_at(0)) * (target - z0) / (z1 - z0);
    if (d > 0.0) {
      traits.dbh = d;
    }
  } else if (target > circles.back().circle.height_z) {
    traits.dbh = std::nullopt;  // stem entirely below 1.3 m: flagged undefined
  } else {
    for (size_t i = 0; i + 1 < circles.size(); ++i) {
      const double z0 = circles[i].circle.height_z;
      const double z1 = circles[i + 1].circle.height_z;
      if (target >= z0 && target <= z1) {
        const double f = (target - z0) / (z1 - z0);
        traits.dbh = (1.0 - f) * diameter_at(i) + f * diameter_at(i + 1);
        break;
      }
    }
  }

  traits.stem_curve.reserve(circles.size());
  for (const auto& c : circles) {
    traits.stem_curve.push_back(
        {c.circle.height_z - base, c.circle.cx, c.circle.cy, 2.0 * c.circle.radius});
  }
  traits.reconstructed_stem_height = circles.back().circle.height_z - base;
  traits.tree_height = max_point_z - base;
  return traits;
}

}  // namespace forestinv
