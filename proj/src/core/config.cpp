#include "core/config.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <vector>

#include <json.hpp>

namespace forestinv {

using nlohmann::json;

namespace {

// Field registry: one entry per configurable value, with its JSON path and
// range check. Serialization, strict parsing and overrides all run off it.
struct Field {
  std::string section;
  std::string key;
  enum class Type { Double, Int, Bool, Uint64 } type;
  std::function<double(const RunConfig&)> get;
  std::function<void(RunConfig&, double)> set;
  double min = -1e300;
  double max = 1e300;
};

std::vector<Field> field_registry() {
  std::vector<Field> f;

#define FIELD_D(section, key, expr, lo, hi)                                            \
  f.push_back({section, key, Field::Type::Double,                                      \
               [](const RunConfig& c) -> double { return c.expr; },                    \
               [](RunConfig& c, double v) { c.expr = v; }, lo, hi})
#define FIELD_I(section, key, expr, lo, hi)                                            \
  f.push_back({section, key, Field::Type::Int,                                         \
               [](const RunConfig& c) -> double { return static_cast<double>(c.expr); }, \
               [](RunConfig& c, double v) { c.expr = static_cast<int>(v); }, lo, hi})
#define FIELD_B(section, key, expr)                                                    \
  f.push_back({section, key, Field::Type::Bool,                                        \
               [](const RunConfig& c) -> double { return c.expr ? 1.0 : 0.0; },        \
               [](RunConfig& c, double v) { c.expr = v != 0.0; }, 0, 1})
#define FIELD_U(section, key, expr)                                                    \
  f.push_back({section, key, Field::Type::Uint64,                                      \
               [](const RunConfig& c) -> double { return static_cast<double>(c.expr); }, \
               [](RunConfig& c, double v) { c.expr = static_cast<uint64_t>(v); }, 0, 1.8e19})

  FIELD_D("payload", "trigger_length_m", payload.trigger_length, 1e-3, 1e4);
  FIELD_D("payload", "voxel_resolution_m", payload.voxel_resolution, 1e-4, 10.0);
  FIELD_D("payload", "max_range_m", payload.max_range, 0.1, 1e4);

  FIELD_D("terrain", "csf_grid_resolution_m", csf.grid_resolution, 0.05, 10.0);
  FIELD_I("terrain", "csf_rigidness", csf.rigidness, 1, 10);
  FIELD_D("terrain", "csf_gravity_step_m", csf.gravity_step, 1e-4, 1.0);
  FIELD_I("terrain", "csf_max_iterations", csf.max_iterations, 1, 100000);
  FIELD_D("terrain", "csf_class_threshold_m", csf.class_threshold, 1e-3, 5.0);
  FIELD_D("terrain", "csf_convergence_delta_m", csf.convergence_delta, 1e-6, 1.0);
  FIELD_D("terrain", "global_grid_resolution_m", runtime.global_dtm_resolution, 0.01, 10.0);

  FIELD_D("segmentation", "dbscan_eps_m", segmentation.dbscan_eps, 1e-3, 10.0);
  FIELD_I("segmentation", "dbscan_min_pts", segmentation.dbscan_min_pts, 1, 100000);
  FIELD_D("segmentation", "radius_min_m", segmentation.radius_min, 1e-4, 10.0);
  FIELD_D("segmentation", "radius_max_m", segmentation.radius_max, 1e-3, 10.0);
  FIELD_D("segmentation", "max_tilt_deg", segmentation.max_tilt_deg, 0.0, 90.0);
  FIELD_D("segmentation", "suppression_radius_m", segmentation.suppression_radius, 0.0, 100.0);
  FIELD_D("segmentation", "reference_height_m", segmentation.reference_height, 0.0, 100.0);
  FIELD_D("segmentation", "assign_extra_m", segmentation.assign_extra, 0.0, 100.0);
  FIELD_D("segmentation", "slice_fraction", segmentation.slice_fraction, 0.01, 0.5);
  FIELD_D("segmentation", "crop0_lo_m", segmentation.crop_intervals[0][0], 0.0, 100.0);
  FIELD_D("segmentation", "crop0_hi_m", segmentation.crop_intervals[0][1], 0.0, 100.0);
  FIELD_D("segmentation", "crop1_lo_m", segmentation.crop_intervals[1][0], 0.0, 100.0);
  FIELD_D("segmentation", "crop1_hi_m", segmentation.crop_intervals[1][1], 0.0, 100.0);
  FIELD_D("segmentation", "crop2_lo_m", segmentation.crop_intervals[2][0], 0.0, 100.0);
  FIELD_D("segmentation", "crop2_hi_m", segmentation.crop_intervals[2][1], 0.0, 100.0);

  FIELD_D("tree_manager", "association_distance_m", tree_manager.association_distance, 1e-3,
          100.0);
  FIELD_D("tree_manager", "min_sensor_distance_m", tree_manager.min_sensor_distance, 0.0, 1000.0);
  FIELD_D("tree_manager", "min_coverage_angle_rad", tree_manager.min_coverage_angle, 0.0,
          2.0 * M_PI);
  FIELD_D("tree_manager", "aperture_extra_deg", tree_manager.aperture_extra_deg, 0.0, 180.0);
  FIELD_D("tree_manager", "reference_height_m", tree_manager.reference_height, 0.0, 100.0);

  FIELD_D("reconstruction", "slice_spacing_m", reconstruction.slice_spacing, 0.01, 10.0);
  FIELD_D("reconstruction", "slice_thickness_m", reconstruction.slice_thickness, 0.005, 10.0);
  FIELD_D("reconstruction", "vote_sphere_radius", reconstruction.vote_sphere_radius, 1e-4, 1.0);
  FIELD_D("reconstruction", "r_min_m", reconstruction.r_min, 1e-4, 10.0);
  FIELD_D("reconstruction", "r_max_m", reconstruction.r_max, 1e-3, 10.0);
  FIELD_D("reconstruction", "center_drift_m", reconstruction.center_drift, 1e-4, 10.0);
  FIELD_D("reconstruction", "radius_drift_m", reconstruction.radius_drift, 1e-4, 10.0);
  FIELD_I("reconstruction", "rht_iterations", reconstruction.rht_iterations, 1, 1000000);
  FIELD_I("reconstruction", "min_votes", reconstruction.min_votes, 1, 1000000);
  FIELD_D("reconstruction", "density_radius_m", reconstruction.density_radius, 1e-4, 10.0);
  FIELD_D("reconstruction", "inlier_band_m", reconstruction.inlier_band, 1e-4, 1.0);
  FIELD_I("reconstruction", "max_slice_failures", reconstruction.max_slice_failures, 1, 1000);
  FIELD_D("reconstruction", "min_triplet_area_m2", reconstruction.min_triplet_area, 0.0, 1.0);
  FIELD_D("reconstruction", "min_triplet_separation_m", reconstruction.min_triplet_separation, 0.0,
          10.0);
  FIELD_D("reconstruction", "canopy_min_height_m", reconstruction.canopy_min_height, 0.0, 100.0);
  FIELD_D("reconstruction", "canopy_axis_diameters", reconstruction.canopy_axis_diameters, 0.0,
          100.0);
  FIELD_I("reconstruction", "min_slice_points", reconstruction.min_slice_points, 3, 100000);
  FIELD_D("reconstruction", "hough_center_bin_m", reconstruction.hough_center_bin, 1e-4, 1.0);
  FIELD_D("reconstruction", "hough_radius_bin_m", reconstruction.hough_radius_bin, 1e-4, 1.0);
  FIELD_I("reconstruction", "ransac_iterations", reconstruction.ransac_iterations, 1, 1000000);

  FIELD_U("runtime", "seed", runtime.seed);
  FIELD_D("runtime", "rt_factor", runtime.rt_factor, 0.0, 1000.0);
  FIELD_I("runtime", "workers", runtime.workers, 1, 256);
  FIELD_B("runtime", "store_clouds", runtime.store_clouds);
  FIELD_I("runtime", "export_min_clusters", runtime.export_min_clusters, 1, 1000);
  FIELD_D("runtime", "flush_min_length_m", runtime.flush_min_length, 0.0, 1e4);

#undef FIELD_D
#undef FIELD_I
#undef FIELD_B
#undef FIELD_U
  return f;
}

const std::vector<Field>& fields() {
  static const std::vector<Field> registry = field_registry();
  return registry;
}

void validate(const RunConfig& cfg) {
  if (cfg.segmentation.radius_min >= cfg.segmentation.radius_max) {
    throw invalid_argument_error("config: segmentation radius_min must be < radius_max");
  }
  if (cfg.reconstruction.r_min >= cfg.reconstruction.r_max) {
    throw invalid_argument_error("config: reconstruction r_min must be < r_max");
  }
  for (const auto& interval : cfg.segmentation.crop_intervals) {
    if (!(interval[0] < interval[1])) {
      throw invalid_argument_error("config: crop interval lower bound must be below upper");
    }
  }
}

}  // namespace

std::string RunConfig::to_json() const {
  json doc;
  for (const auto& f : fields()) {
    const double v = f.get(*this);
    switch (f.type) {
      case Field::Type::Double:
        doc[f.section][f.key] = v;
        break;
      case Field::Type::Int:
        doc[f.section][f.key] = static_cast<int64_t>(v);
        break;
      case Field::Type::Bool:
        doc[f.section][f.key] = v != 0.0;
        break;
      case Field::Type::Uint64:
        doc[f.section][f.key] = static_cast<uint64_t>(v);
        break;
    }
  }
  return doc.dump(2) + "\n";
}

RunConfig RunConfig::from_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw input_error(std::string("config parse error: ") + e.what());
  }
  RunConfig cfg;
  // reject unknown sections/keys
  for (const auto& [section, body] : doc.items()) {
    if (!body.is_object()) {
      throw input_error("config: section '" + section + "' must be an object");
    }
    for (const auto& [key, value] : body.items()) {
      static_cast<void>(value);
      const bool known = std::any_of(fields().begin(), fields().end(), [&](const Field& f) {
        return f.section == section && f.key == key;
      });
      if (!known) {
        throw input_error("config: unknown key '" + section + "." + key + "'");
      }
    }
  }
  for (const auto& f : fields()) {
    if (!doc.contains(f.section) || !doc.at(f.section).contains(f.key)) {
      continue;  // absent keys keep their defaults
    }
    const auto& value = doc.at(f.section).at(f.key);
    double v = 0.0;
    if (f.type == Field::Type::Bool) {
      if (!value.is_boolean()) {
        throw input_error("config: " + f.section + "." + f.key + " must be a boolean");
      }
      v = value.get<bool>() ? 1.0 : 0.0;
    } else if (value.is_number()) {
      v = value.get<double>();
    } else {
      throw input_error("config: " + f.section + "." + f.key + " must be a number");
    }
    if (v < f.min || v > f.max || std::isnan(v)) {
      throw input_error("config: " + f.section + "." + f.key + " out of range");
    }
    f.set(cfg, v);
  }
  validate(cfg);
  return cfg;
}

void RunConfig::apply_override(const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) {
    throw input_error("override must look like section.key=value: " + assignment);
  }
  const std::string path = assignment.substr(0, eq);
  const std::string value = assignment.substr(eq + 1);
  const auto dot = path.find('.');
  if (dot == std::string::npos) {
    throw input_error("override path must be section.key: " + assignment);
  }
  const std::string section = path.substr(0, dot);
  const std::string key = path.substr(dot + 1);
  for (const auto& f : fields()) {
    if (f.section != section || f.key != key) {
      continue;
    }
    double v = 0.0;
    if (f.type == Field::Type::Bool) {
      if (value == "true" || value == "1") {
        v = 1.0;
      } else if (value == "false" || value == "0") {
        v = 0.0;
      } else {
        throw input_error("override: boolean expected for " + path);
      }
    } else {
      try {
        v = std::stod(value);
      } catch (const std::exception&) {
        throw input_error("override: number expected for " + path);
      }
    }
    if (v < f.min || v > f.max || std::isnan(v)) {
      throw input_error("override: value out of range for " + path);
    }
    f.set(*this, v);
    validate(*this);
    return;
  }
  throw input_error("override: unknown key " + path);
}

std::string RunConfig::hash() const {
  const std::string dump = to_json();
  uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : dump) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace forestinv
