#include "core/io.hpp"

#include <algorithm>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <tuple>

#include <json.hpp>

namespace forestinv {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string format_stamp(double t) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%015.6f", t);
  return buf;
}

}  // namespace

void write_ply(const fs::path& path, const PointCloud& cloud, const std::vector<int>* tree_ids) {
  if (tree_ids && tree_ids->size() != cloud.size()) {
    throw invalid_argument_error("write_ply: tree_ids size mismatch");
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw io_error("write_ply: cannot open " + path.string());
  }
  out << "ply\nformat binary_little_endian 1.0\nelement vertex " << cloud.size()
      << "\nproperty float x\nproperty float y\nproperty float z\n";
  if (tree_ids) {
    out << "property int tree_id\n";
  }
  out << "end_header\n";
  for (size_t i = 0; i < cloud.size(); ++i) {
    const float xyz[3] = {static_cast<float>(cloud[i].x()), static_cast<float>(cloud[i].y()),
                          static_cast<float>(cloud[i].z())};
    out.write(reinterpret_cast<const char*>(xyz), sizeof(xyz));
    if (tree_ids) {
      const int32_t id = (*tree_ids)[i];
      out.write(reinterpret_cast<const char*>(&id), sizeof(id));
    }
  }
  if (!out) {
    throw io_error("write_ply: write failed for " + path.string());
  }
}

PointCloud read_ply(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw io_error("read_ply: cannot open " + path.string());
  }
  std::string line;
  size_t vertex_count = 0;
  struct Property {
    std::string type;
    std::string name;
  };
  std::vector<Property> properties;
  bool header_done = false;
  if (!std::getline(in, line) || line != "ply") {
    throw io_error("read_ply: not a PLY file: " + path.string());
  }
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string token;
    ls >> token;
    if (token == "format") {
      std::string fmt;
      ls >> fmt;
      if (fmt != "binary_little_endian") {
        throw io_error("read_ply: unsupported format " + fmt);
      }
    } else if (token == "element") {
      std::string name;
      ls >> name >> vertex_count;
      if (name != "vertex") {
        throw io_error("read_ply: unsupported element " + name);
      }
    } else if (token == "property") {
      Property p;
      ls >> p.type >> p.name;
      properties.push_back(p);
    } else if (token == "end_header") {
      header_done = true;
      break;
    }
  }
  if (!header_done) {
    throw io_error("read_ply: truncated header in " + path.string());
  }
  size_t stride = 0;
  size_t offset_x = SIZE_MAX, offset_y = SIZE_MAX, offset_z = SIZE_MAX;
  for (const auto& p : properties) {
    size_t size = 0;
    if (p.type == "float" || p.type == "int" || p.type == "uint" || p.type == "float32" ||
        p.type == "int32") {
      size = 4;
    } else if (p.type == "double" || p.type == "float64") {
      size = 8;
    } else if (p.type == "uchar" || p.type == "char" || p.type == "uint8" || p.type == "int8") {
      size = 1;
    } else {
      throw io_error("read_ply: unsupported property type " + p.type);
    }
    if (p.name == "x") {
      offset_x = stride;
    } else if (p.name == "y") {
      offset_y = stride;
    } else if (p.name == "z") {
      offset_z = stride;
    }
    stride += size;
  }
  if (offset_x == SIZE_MAX || offset_y == SIZE_MAX || offset_z == SIZE_MAX) {
    throw io_error("read_ply: missing x/y/z in " + path.string());
  }
  std::vector<char> record(stride);
  PointCloud cloud;
  cloud.reserve(vertex_count);
  for (size_t i = 0; i < vertex_count; ++i) {
    in.read(record.data(), static_cast<std::streamsize>(stride));
    if (!in) {
      throw io_error("read_ply: truncated data in " + path.string());
    }
    float x, y, z;
    std::memcpy(&x, record.data() + offset_x, 4);
    std::memcpy(&y, record.data() + offset_y, 4);
    std::memcpy(&z, record.data() + offset_z, 4);
    cloud.push_back({x, y, z});
  }
  return cloud;
}

void write_ply_mesh(const fs::path& path, const TriMesh& mesh) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw io_error("write_ply_mesh: cannot open " + path.string());
  }
  out << "ply\nformat binary_little_endian 1.0\nelement vertex " << mesh.vertices.size()
      << "\nproperty float x\nproperty float y\nproperty float z\nelement face "
      << mesh.triangles.size() << "\nproperty list uchar int vertex_indices\nend_header\n";
  for (const auto& v : mesh.vertices) {
    const float xyz[3] = {static_cast<float>(v.x()), static_cast<float>(v.y()),
                          static_cast<float>(v.z())};
    out.write(reinterpret_cast<const char*>(xyz), sizeof(xyz));
  }
  for (const auto& t : mesh.triangles) {
    const uint8_t n = 3;
    out.write(reinterpret_cast<const char*>(&n), 1);
    const int32_t idx[3] = {t[0], t[1], t[2]};
    out.write(reinterpret_cast<const char*>(idx), sizeof(idx));
  }
  if (!out) {
    throw io_error("write_ply_mesh: write failed for " + path.string());
  }
}

void write_trajectory(const fs::path& path, const std::vector<StampedTransform>& trajectory) {
  std::ofstream out(path);
  if (!out) {
    throw io_error("write_trajectory: cannot open " + path.string());
  }
  char line[256];
  for (const auto& s : trajectory) {
    const auto& q = s.tf.rotation;
    const auto& t = s.tf.translation;
    std::snprintf(line, sizeof(line), "%.6f %.9f %.9f %.9f %.12f %.12f %.12f %.12f\n",
                  s.timestamp, t.x(), t.y(), t.z(), q.x(), q.y(), q.z(), q.w());
    out << line;
  }
}

namespace {

StampedTransform parse_pose_record(const std::string& line) {
  std::istringstream ls(line);
  StampedTransform s;
  double qx, qy, qz, qw;
  if (!(ls >> s.timestamp >> s.tf.translation.x() >> s.tf.translation.y() >>
        s.tf.translation.z() >> qx >> qy >> qz >> qw)) {
    throw io_error("trajectory record malformed: " + line);
  }
  s.tf.rotation = Eigen::Quaterniond(qw, qx, qy, qz).normalized();
  return s;
}

}  // namespace

std::vector<StampedTransform> read_trajectory(const fs::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw io_error("read_trajectory: cannot open " + path.string());
  }
  std::vector<StampedTransform> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') {
      continue;
    }
    out.push_back(parse_pose_record(line));
  }
  return out;
}

void write_loop_closures(const fs::path& path, const std::vector<LoopClosureEvent>& events) {
  std::ofstream out(path);
  if (!out) {
    throw io_error("write_loop_closures: cannot open " + path.string());
  }
  char line[256];
  for (const auto& e : events) {
    std::snprintf(line, sizeof(line), "LOOPCLOSURE %.6f %.6f\n", e.t_start, e.t_end);
    out << line;
    for (const auto& s : e.corrections) {
      const auto& q = s.tf.rotation;
      const auto& t = s.tf.translation;
      std::snprintf(line, sizeof(line), "%.6f %.9f %.9f %.9f %.12f %.12f %.12f %.12f\n",
                    s.timestamp, t.x(), t.y(), t.z(), q.x(), q.y(), q.z(), q.w());
      out << line;
    }
  }
}

std::vector<LoopClosureEvent> read_loop_closures(const fs::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw io_error("read_loop_closures: cannot open " + path.string());
  }
  std::vector<LoopClosureEvent> events;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') {
      continue;
    }
    if (line.rfind("LOOPCLOSURE", 0) == 0) {
      std::istringstream ls(line);
      std::string tag;
      LoopClosureEvent e;
      e.kind = LoopClosureEvent::Kind::Absolute;
      if (!(ls >> tag >> e.t_start >> e.t_end)) {
        throw io_error("loop closure header malformed: " + line);
      }
      events.push_back(std::move(e));
    } else {
      if (events.empty()) {
        throw io_error("loop closure record before any LOOPCLOSURE header");
      }
      events.back().corrections.push_back(parse_pose_record(line));
    }
  }
  return events;
}

void write_ground_truth(const fs::path& path, const std::vector<GroundTruthTree>& trees) {
  json doc;
  doc["trees"] = json::array();
  for (const auto& t : trees) {
    json jt;
    jt["id"] = t.id;
    jt["base"] = {t.base.x(), t.base.y(), t.base.z()};
    jt["dbh_m"] = t.dbh;
    jt["height_m"] = t.height;
    json curve = json::array();
    for (const auto& s : t.stem_curve) {
      curve.push_back({{"height_m", s.height},
                       {"center", {s.center_x, s.center_y}},
                       {"diameter_m", s.diameter}});
    }
    jt["stem_curve"] = std::move(curve);
    doc["trees"].push_back(std::move(jt));
  }
  write_text_file(path, doc.dump(2) + "\n");
}

std::vector<GroundTruthTree> read_ground_truth(const fs::path& path) {
  const json doc = json::parse(read_text_file(path));
  std::vector<GroundTruthTree> trees;
  for (const auto& jt : doc.at("trees")) {
    GroundTruthTree t;
    t.id = jt.at("id").get<int>();
    const auto& base = jt.at("base");
    t.base = {base.at(0).get<double>(), base.at(1).get<double>(), base.at(2).get<double>()};
    t.dbh = jt.at("dbh_m").get<double>();
    t.height = jt.at("height_m").get<double>();
    for (const auto& js : jt.at("stem_curve")) {
      StemCurveSample s;
      s.height = js.at("height_m").get<double>();
      s.center_x = js.at("center").at(0).get<double>();
      s.center_y = js.at("center").at(1).get<double>();
      s.diameter = js.at("diameter_m").get<double>();
      t.stem_curve.push_back(s);
    }
    trees.push_back(std::move(t));
  }
  return trees;
}

namespace {

struct SpecField {
  const char* key;
  std::function<double(const SyntheticForestSpec&)> get;
  std::function<void(SyntheticForestSpec&, double)> set;
};

const std::vector<SpecField>& spec_fields() {
  static const std::vector<SpecField> fields = [] {
    std::vector<SpecField> f;
#define SPEC_FIELD(name, expr)                                                       \
  f.push_back({name, [](const SyntheticForestSpec& s) -> double { return static_cast<double>(s.expr); }, \
               [](SyntheticForestSpec& s, double v) {                                \
                 s.expr = static_cast<decltype(s.expr)>(v);                          \
               }})
    SPEC_FIELD("seed", seed);
    SPEC_FIELD("extent_x_m", extent_x);
    SPEC_FIELD("extent_y_m", extent_y);
    SPEC_FIELD("tree_count", tree_count);
    SPEC_FIELD("min_spacing_m", min_spacing);
    SPEC_FIELD("base_radius_min_m", base_radius_min);
    SPEC_FIELD("base_radius_max_m", base_radius_max);
    SPEC_FIELD("taper_rate", taper_rate);
    SPEC_FIELD("lean_sigma_deg", lean_sigma_deg);
    SPEC_FIELD("stem_height_min_m", stem_height_min);
    SPEC_FIELD("stem_height_max_m", stem_height_max);
    SPEC_FIELD("noise_sigma_m", noise_sigma);
    SPEC_FIELD("outlier_fraction", outlier_fraction);
    SPEC_FIELD("whorl_spacing_m", whorl_spacing);
    SPEC_FIELD("row_spacing_m", row_spacing);
    SPEC_FIELD("speed_mps", speed);
    SPEC_FIELD("frame_rate_hz", frame_rate);
    SPEC_FIELD("margin_m", margin);
    SPEC_FIELD("sensor_height_m", sensor_height);
    SPEC_FIELD("sensor_range_m", sensor_range);
    SPEC_FIELD("vertical_fov_deg", vertical_fov_deg);
    SPEC_FIELD("visible_arc_deg", visible_arc_deg);
    SPEC_FIELD("terrain_points_per_frame", terrain_points_per_frame);
    SPEC_FIELD("stem_points_per_frame", stem_points_per_frame);
    SPEC_FIELD("canopy_points_per_frame", canopy_points_per_frame);
    SPEC_FIELD("enable_drift", enable_drift);
    SPEC_FIELD("drift_translation_per_m", drift_translation_per_m);
    SPEC_FIELD("drift_yaw_deg_per_m", drift_yaw_deg_per_m);
    SPEC_FIELD("loop_closure_interval_m", loop_closure_interval);
    SPEC_FIELD("terrain_base_z_m", terrain.base_z);
    SPEC_FIELD("terrain_slope_x", terrain.slope_x);
    SPEC_FIELD("terrain_slope_y", terrain.slope_y);
    SPEC_FIELD("terrain_amplitude_m", terrain.amplitude);
    SPEC_FIELD("terrain_wavelength_m", terrain.wavelength);
#undef SPEC_FIELD
    return f;
  }();
  return fields;
}

}  // namespace

SyntheticForestSpec scene_spec_from_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw input_error(std::string("scene spec parse error: ") + e.what());
  }
  SyntheticForestSpec spec;
  for (const auto& [key, value] : doc.items()) {
    if (key == "terrain_kind") {
      const std::string kind = value.get<std::string>();
      if (kind == "flat") {
        spec.terrain.kind = TerrainLaw::Kind::Flat;
      } else if (kind == "slope") {
        spec.terrain.kind = TerrainLaw::Kind::Slope;
      } else if (kind == "undulating") {
        spec.terrain.kind = TerrainLaw::Kind::Undulating;
      } else {
        throw input_error("scene spec: unknown terrain_kind '" + kind + "'");
      }
      continue;
    }
    bool known = false;
    for (const auto& f : spec_fields()) {
      if (key == f.key) {
        if (!value.is_number() && !value.is_boolean()) {
          throw input_error("scene spec: " + key + " must be numeric");
        }
        f.set(spec, value.is_boolean() ? (value.get<bool>() ? 1.0 : 0.0) : value.get<double>());
        known = true;
        break;
      }
    }
    if (!known) {
      throw input_error("scene spec: unknown key '" + key + "'");
    }
  }
  return spec;
}

std::string scene_spec_to_json(const SyntheticForestSpec& spec) {
  json doc;
  switch (spec.terrain.kind) {
    case TerrainLaw::Kind::Flat:
      doc["terrain_kind"] = "flat";
      break;
    case TerrainLaw::Kind::Slope:
      doc["terrain_kind"] = "slope";
      break;
    case TerrainLaw::Kind::Undulating:
      doc["terrain_kind"] = "undulating";
      break;
  }
  for (const auto& f : spec_fields()) {
    if (std::string(f.key) == "enable_drift") {
      doc[f.key] = spec.enable_drift;
    } else {
      doc[f.key] = f.get(spec);
    }
  }
  return doc.dump(2) + "\n";
}

SliceSuiteSpec slice_suite_from_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw input_error(std::string("slice suite parse error: ") + e.what());
  }
  SliceSuiteSpec spec;
  for (const auto& [key, value] : doc.items()) {
    if (!value.is_number()) {
      throw input_error("slice suite: " + key + " must be numeric");
    }
    const double v = value.get<double>();
    if (key == "seed") {
      spec.seed = static_cast<uint64_t>(v);
    } else if (key == "slice_count") {
      spec.slice_count = static_cast<int>(v);
    } else if (key == "radius_min_m") {
      spec.radius_min = v;
    } else if (key == "radius_max_m") {
      spec.radius_max = v;
    } else if (key == "noise_min_m") {
      spec.noise_min = v;
    } else if (key == "noise_max_m") {
      spec.noise_max = v;
    } else if (key == "arc_min_deg") {
      spec.arc_min_deg = v;
    } else if (key == "arc_max_deg") {
      spec.arc_max_deg = v;
    } else if (key == "bark_fraction") {
      spec.bark_fraction = v;
    } else if (key == "clutter_fraction") {
      spec.clutter_fraction = v;
    } else if (key == "branch_probability") {
      spec.branch_probability = v;
    } else if (key == "stem_points_min") {
      spec.stem_points_min = static_cast<int>(v);
    } else if (key == "stem_points_max") {
      spec.stem_points_max = static_cast<int>(v);
    } else {
      throw input_error("slice suite: unknown key '" + key + "'");
    }
  }
  if (spec.slice_count < 0 || spec.radius_min <= 0 || spec.radius_min >= spec.radius_max) {
    throw input_error("slice suite: invalid ranges");
  }
  return spec;
}

std::string slice_suite_to_json(const SliceSuiteSpec& spec) {
  json doc;
  doc["seed"] = spec.seed;
  doc["slice_count"] = spec.slice_count;
  doc["radius_min_m"] = spec.radius_min;
  doc["radius_max_m"] = spec.radius_max;
  doc["noise_min_m"] = spec.noise_min;
  doc["noise_max_m"] = spec.noise_max;
  doc["arc_min_deg"] = spec.arc_min_deg;
  doc["arc_max_deg"] = spec.arc_max_deg;
  doc["bark_fraction"] = spec.bark_fraction;
  doc["clutter_fraction"] = spec.clutter_fraction;
  doc["branch_probability"] = spec.branch_probability;
  doc["stem_points_min"] = spec.stem_points_min;
  doc["stem_points_max"] = spec.stem_points_max;
  return doc.dump(2) + "\n";
}

std::string marteloscope_to_json(const std::vector<EstimatedTree>& trees,
                                 const std::string& config_hash, uint64_t pose_graph_revision,
                                 uint64_t seed) {
  json doc;
  doc["metadata"] = {{"config_hash", config_hash},
                     {"pose_graph_revision", pose_graph_revision},
                     {"seed", seed},
                     {"tree_count", trees.size()}};
  doc["trees"] = json::array();
  for (const auto& t : trees) {
    json jt;
    jt["id"] = t.id;
    jt["base"] = {t.base.x(), t.base.y(), t.base.z()};
    if (t.dbh) {
      jt["dbh_m"] = *t.dbh;
    } else {
      jt["dbh_m"] = nullptr;
    }
    jt["tree_height_m"] = t.tree_height;
    jt["stem_height_m"] = t.reconstructed_stem_height;
    jt["coverage_angle_rad"] = t.coverage_angle;
    jt["cluster_count"] = t.cluster_count;
    json curve = json::array();
    for (const auto& s : t.stem_curve) {
      curve.push_back({{"height_m", s.height},
                       {"center", {s.center_x, s.center_y}},
                       {"diameter_m", s.diameter}});
    }
    jt["stem_curve"] = std::move(curve);
    doc["trees"].push_back(std::move(jt));
  }
  return doc.dump(2) + "\n";
}

std::vector<EstimatedTree> marteloscope_from_json(const std::string& json_text) {
  const json doc = json::parse(json_text);
  std::vector<EstimatedTree> trees;
  for (const auto& jt : doc.at("trees")) {
    EstimatedTree t;
    t.id = jt.at("id").get<int>();
    const auto& base = jt.at("base");
    t.base = {base.at(0).get<double>(), base.at(1).get<double>(), base.at(2).get<double>()};
    if (!jt.at("dbh_m").is_null()) {
      t.dbh = jt.at("dbh_m").get<double>();
    }
    t.tree_height = jt.at("tree_height_m").get<double>();
    t.reconstructed_stem_height = jt.at("stem_height_m").get<double>();
    t.coverage_angle = jt.at("coverage_angle_rad").get<double>();
    t.cluster_count = jt.at("cluster_count").get<int>();
    for (const auto& js : jt.at("stem_curve")) {
      StemCurveSample s;
      s.height = js.at("height_m").get<double>();
      s.center_x = js.at("center").at(0).get<double>();
      s.center_y = js.at("center").at(1).get<double>();
      s.diameter = js.at("diameter_m").get<double>();
      t.stem_curve.push_back(s);
    }
    trees.push_back(std::move(t));
  }
  return trees;
}

void write_scene(const fs::path& dir, const SyntheticScene& scene) {
  fs::create_directories(dir / "scans");
  for (const auto& frame : scene.frames) {
    write_ply(dir / "scans" / ("scan_" + format_stamp(frame.timestamp) + ".ply"), frame.cloud);
  }
  write_trajectory(dir / "trajectory.txt", scene.drifted_trajectory);
  if (!scene.loop_closures.empty()) {
    write_loop_closures(dir / "loopclosures.txt", scene.loop_closures);
  }
  write_ground_truth(dir / "ground_truth.json", scene.ground_truth);
  json meta;
  meta["frame_count"] = scene.frames.size();
  meta["tree_count"] = scene.ground_truth.size();
  meta["avg_speed"] = scene.speed;
  write_text_file(dir / "scene.json", meta.dump(2) + "\n");
}

SceneInputs open_scene(const fs::path& dir) {
  SceneInputs inputs;
  const fs::path scans = dir / "scans";
  if (!fs::exists(scans) || !fs::is_directory(scans)) {
    throw io_error("open_scene: missing scans directory under " + dir.string());
  }
  for (const auto& entry : fs::directory_iterator(scans)) {
    if (!entry.is_regular_file() || entry.path().extension() != ".ply") {
      continue;
    }
    const std::string stem = entry.path().stem().string();  // scan_<stamp>
    const auto pos = stem.find('_');
    if (pos == std::string::npos) {
      continue;
    }
    inputs.scans.emplace_back(std::stod(stem.substr(pos + 1)), entry.path());
  }
  std::sort(inputs.scans.begin(), inputs.scans.end());
  inputs.trajectory = read_trajectory(dir / "trajectory.txt");
  if (fs::exists(dir / "loopclosures.txt")) {
    inputs.loop_closures = read_loop_closures(dir / "loopclosures.txt");
  }
  if (fs::exists(dir / "ground_truth.json")) {
    inputs.ground_truth = dir / "ground_truth.json";
  }
  if (fs::exists(dir / "scene.json")) {
    const json meta = json::parse(read_text_file(dir / "scene.json"));
    if (meta.contains("avg_speed")) {
      inputs.avg_speed = meta.at("avg_speed").get<double>();
    }
  }
  return inputs;
}

void write_global_dtm(const fs::path& ply_path, const fs::path& grid_path, const GlobalDTM& dtm) {
  // Gridded text format, row-sorted for diffing.
  std::vector<std::tuple<int64_t, int64_t, double, double>> rows;
  rows.reserve(dtm.samples.size());
  for (const auto& [key, sample] : dtm.samples) {
    const int64_t ix = static_cast<int32_t>(key >> 32);
    const int64_t iy = static_cast<int32_t>(key & 0xFFFFFFFFULL);
    rows.emplace_back(ix, iy, sample.height, sample.weight);
  }
  std::sort(rows.begin(), rows.end());
  std::ofstream grid(grid_path);
  if (!grid) {
    throw io_error("write_global_dtm: cannot open " + grid_path.string());
  }
  char line[160];
  for (const auto& [ix, iy, h, w] : rows) {
    std::snprintf(line, sizeof(line), "%.6f %.6f %.6f %.6f\n",
                  static_cast<double>(ix) * dtm.grid_resolution,
                  static_cast<double>(iy) * dtm.grid_resolution, h, w);
    grid << line;
  }
  grid.close();

  // Mesh: vertices for covered samples, faces where all four cell corners
  // are covered.
  TriMesh mesh;
  std::map<std::pair<int64_t, int64_t>, int> vertex_index;
  for (const auto& [ix, iy, h, w] : rows) {
    vertex_index[{ix, iy}] = static_cast<int>(mesh.vertices.size());
    mesh.vertices.push_back({static_cast<double>(ix) * dtm.grid_resolution,
                             static_cast<double>(iy) * dtm.grid_resolution, h});
  }
  for (const auto& [coord, v00] : vertex_index) {
    const auto [ix, iy] = coord;
    auto it10 = vertex_index.find({ix + 1, iy});
    auto it01 = vertex_index.find({ix, iy + 1});
    auto it11 = vertex_index.find({ix + 1, iy + 1});
    if (it10 == vertex_index.end() || it01 == vertex_index.end() || it11 == vertex_index.end()) {
      continue;
    }
    mesh.triangles.push_back({v00, it10->second, it11->second});
    mesh.triangles.push_back({v00, it11->second, it01->second});
  }
  write_ply_mesh(ply_path, mesh);
}

std::string read_text_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw io_error("read_text_file: cannot open " + path.string());
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path());
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw io_error("write_text_file: cannot open " + path.string());
  }
  out << text;
  if (!out) {
    throw io_error("write_text_file: write failed for " + path.string());
  }
}

}  // namespace forestinv
