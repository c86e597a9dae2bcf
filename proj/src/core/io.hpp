// File formats: binary little-endian PLY clouds and meshes, trajectory and
// loop-closure text files, scene directories, ground truth and marteloscope
// JSON documents.

#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "core/hull.hpp"
#include "core/metrics.hpp"
#include "core/payload.hpp"
#include "core/pose_graph.hpp"
#include "core/synth.hpp"
#include "core/terrain.hpp"

namespace forestinv {

// --- PLY ---------------------------------------------------------------------

/// Binary little-endian PLY with float32 x/y/z. `tree_ids`, when given, adds
/// an int32 per-vertex tree_id property (cluster debug exports).
void write_ply(const std::filesystem::path& path, const PointCloud& cloud,
               const std::vector<int>* tree_ids = nullptr);

PointCloud read_ply(const std::filesystem::path& path);

/// Mesh PLY (vertices + triangular faces).
void write_ply_mesh(const std::filesystem::path& path, const TriMesh& mesh);

// --- trajectory and loop-closure files ----------------------------------------

/// One record per line: `timestamp tx ty tz qx qy qz qw`.
void write_trajectory(const std::filesystem::path& path,
                      const std::vector<StampedTransform>& trajectory);
std::vector<StampedTransform> read_trajectory(const std::filesystem::path& path);

/// Blocks of `LOOPCLOSURE t_start t_end` followed by corrected pose records.
void write_loop_closures(const std::filesystem::path& path,
                         const std::vector<LoopClosureEvent>& events);
std::vector<LoopClosureEvent> read_loop_closures(const std::filesystem::path& path);

// --- ground truth / marteloscope JSON ----------------------------------------

void write_ground_truth(const std::filesystem::path& path,
                        const std::vector<GroundTruthTree>& trees);
std::vector<GroundTruthTree> read_ground_truth(const std::filesystem::path& path);

/// Scene spec JSON (strict: unknown keys rejected). An empty document gives
/// the defaults.
SyntheticForestSpec scene_spec_from_json(const std::string& text);
std::string scene_spec_to_json(const SyntheticForestSpec& spec);

/// Fitter benchmark suite spec JSON (strict).
SliceSuiteSpec slice_suite_from_json(const std::string& text);
std::string slice_suite_to_json(const SliceSuiteSpec& spec);

std::string marteloscope_to_json(const std::vector<EstimatedTree>& trees,
                                 const std::string& config_hash, uint64_t pose_graph_revision,
                                 uint64_t seed);
std::vector<EstimatedTree> marteloscope_from_json(const std::string& json_text);

// --- scene directories ---------------------------------------------------------

/// Writes scans/<stamp>.ply, trajectory.txt, loopclosures.txt,
/// ground_truth.json and scene.json under `dir`.
void write_scene(const std::filesystem::path& dir, const SyntheticScene& scene);

struct SceneInputs {
  std::vector<std::pair<double, std::filesystem::path>> scans;  // time-ordered
  std::vector<StampedTransform> trajectory;
  std::vector<LoopClosureEvent> loop_closures;
  std::optional<double> avg_speed;
  std::filesystem::path ground_truth;  // empty when absent
};

SceneInputs open_scene(const std::filesystem::path& dir);

/// Global DTM exports: PLY mesh plus a `x y z weight` text grid for diffing.
void write_global_dtm(const std::filesystem::path& ply_path,
                      const std::filesystem::path& grid_path, const GlobalDTM& dtm);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace forestinv
