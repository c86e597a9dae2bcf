// High-level drivers: scene replay through the pipeline, evaluation against
// ground truth, the circle-fitter benchmark, and the ablation runs. These
// back the shared-library entry points one-to-one.

#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>

#include "core/config.hpp"
#include "core/metrics.hpp"
#include "core/pipeline.hpp"
#include "core/synth.hpp"

namespace forestinv {

struct RunOptions {
  bool realign = true;
  bool write_outputs = true;  // marteloscope, DTM, report under out_dir
};

struct RunResult {
  std::string marteloscope_json;
  size_t payload_count = 0;
  double mean_payload_seconds = 0.0;
  double mean_payload_interval = 0.0;  // simulated accumulation budget
  double wall_seconds = 0.0;
  uint64_t marteloscope_bytes = 0;
  uint64_t cloud_bytes = 0;
  size_t tree_count = 0;
  std::optional<EvalReport> eval;  // when the scene carries ground truth
};

/// Replays a scene directory through the pipeline, honoring the real-time
/// factor, and writes marteloscope/DTM/report artifacts under out_dir.
RunResult run_scene_dir(const std::filesystem::path& scene_dir, const RunConfig& cfg,
                        const std::filesystem::path& out_dir, const RunOptions& options = {});

/// Replays a scene directory into an existing pipeline and finalizes it
/// (used when the caller needs the live instance database afterwards).
void replay_scene_dir(const std::filesystem::path& scene_dir, Pipeline& pipeline,
                      const RunConfig& cfg);

/// In-memory replay of a generated scene (used by tests and ablations).
RunResult run_scene_memory(const SyntheticScene& scene, const RunConfig& cfg,
                           Pipeline* pipeline_out = nullptr,
                           const RunOptions& options = {.realign = true, .write_outputs = false});

/// Evaluates a marteloscope JSON file against a ground-truth JSON file.
EvalReport evaluate_files(const std::filesystem::path& marteloscope_path,
                          const std::filesystem::path& truth_path);

// --- fitter benchmark ---------------------------------------------------------

struct FitterBenchRow {
  std::string name;
  double rmse = 0.0;        // diameter RMSE over successful fits
  double mean_ms = 0.0;     // per-call time
  int failures = 0;
  int slices = 0;
};

struct FitterBenchReport {
  std::vector<FitterBenchRow> rows;  // Hough, RANSAC, RANSAC*, RHT
  std::string to_table() const;
  std::string to_json() const;
};

FitterBenchReport bench_fitters(const SliceSuiteSpec& suite, const ReconstructionConfig& cfg);

// --- ablations -----------------------------------------------------------------

struct AblationComparison {
  EvalReport baseline;
  EvalReport variant;
  std::string to_json() const;
};

/// Runs the pipeline twice on the same scene: with and without the tree
/// manager's realignment (the pose graph still receives loop closures).
AblationComparison ablate_no_realign(const SyntheticScene& scene, const RunConfig& cfg);

/// Re-reconstructs every matched tree from cluster subsets bucketed by
/// achieved coverage angle; reports the per-bucket median stem-diameter RMSE.
/// Bucket keys are the lower edges in degrees (40, 60, ..., 340).
std::map<int, std::vector<double>> coverage_sweep(Pipeline& pipeline,
                                                  const std::vector<GroundTruthTree>& truth,
                                                  int bucket_deg = 20);

std::string coverage_sweep_to_json(const std::map<int, std::vector<double>>& buckets);

double median(std::vector<double> values);

}  // namespace forestinv
