#include "core/runner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <memory>
#include <thread>
#include <unordered_map>

#include <json.hpp>

#include "core/io.hpp"
#include "core/rng.hpp"

namespace forestinv {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

double now_seconds() {
  return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

uint64_t peak_rss_bytes() {
  std::ifstream status("/proc/self/status");
  std::string line;
  while (std::getline(status, line)) {
    if (line.rfind("VmHWM:", 0) == 0) {
      uint64_t kb = 0;
      std::sscanf(line.c_str(), "VmHWM: %llu", reinterpret_cast<unsigned long long*>(&kb));
      return kb * 1024;
    }
  }
  return 0;
}

/// Feeds frames through the pipeline, applying loop-closure events as the
/// stream passes their end time. Frames are paced by rt_factor when > 0.
template <typename FrameSource>
void replay(Pipeline& pipeline, FrameSource&& next_frame,
            const std::vector<LoopClosureEvent>& events, double rt_factor) {
  std::vector<const LoopClosureEvent*> pending;
  pending.reserve(events.size());
  for (const auto& e : events) {
    pending.push_back(&e);
  }
  std::sort(pending.begin(), pending.end(),
            [](const LoopClosureEvent* a, const LoopClosureEvent* b) { return a->t_end < b->t_end; });
  size_t next_event = 0;

  const double wall_start = now_seconds();
  double stream_start = 0.0;
  bool first = true;
  while (auto frame = next_frame()) {
    if (first) {
      stream_start = frame->timestamp;
      first = false;
    }
    if (rt_factor > 0.0) {
      const double stream_elapsed = (frame->timestamp - stream_start) / rt_factor;
      const double wall_elapsed = now_seconds() - wall_start;
      if (stream_elapsed > wall_elapsed) {
        std::this_thread::sleep_for(std::chrono::duration<double>(stream_elapsed - wall_elapsed));
      }
    }
    pipeline.push_scan(*frame);
    while (next_event < pending.size() &&
           frame->timestamp >= pending[next_event]->t_end - 1e-9) {
      pipeline.apply_loop_closure(*pending[next_event]);
      ++next_event;
    }
  }
  // any events beyond the stream end still apply before finalize
  while (next_event < pending.size()) {
    pipeline.apply_loop_closure(*pending[next_event]);
    ++next_event;
  }
}

uint64_t write_run_outputs(const fs::path& out_dir, Pipeline& pipeline, RunResult& result,
                           const RunConfig& cfg) {
  fs::create_directories(out_dir);
  write_text_file(out_dir / "marteloscope.json", result.marteloscope_json);
  result.marteloscope_bytes = fs::file_size(out_dir / "marteloscope.json");

  const auto dtm = pipeline.global_dtm();
  write_global_dtm(out_dir / "global_dtm.ply", out_dir / "global_dtm_grid.txt", *dtm);

  uint64_t cloud_bytes = 0;
  if (cfg.runtime.store_clouds) {
    const fs::path cloud_dir = out_dir / "clouds";
    fs::create_directories(cloud_dir);
    for (const auto& [id, instance] : pipeline.tree_manager().instances()) {
      if (static_cast<int>(instance.clusters.size()) < cfg.runtime.export_min_clusters) {
        continue;
      }
      PointCloud merged(FrameTag::map());
      std::vector<int> ids;
      for (const auto& c : instance.map_clusters()) {
        for (const auto& p : c.cloud.points) {
          merged.push_back(p);
          ids.push_back(id);
        }
      }
      char name[64];
      std::snprintf(name, sizeof(name), "tree_%05d.ply", id);
      write_ply(cloud_dir / name, merged, &ids);
      cloud_bytes += fs::file_size(cloud_dir / name);
    }
  }
  result.cloud_bytes = cloud_bytes;

  // timing / storage / memory report (wall-clock values live only here)
  json report;
  json stages;
  for (const auto& [name, acc] : pipeline.stats().stages) {
    stages[name] = {{"mean_s", acc.mean()}, {"std_s", acc.stddev()}};
  }
  stages["reconstruction"] = {
      {"mean_s", pipeline.payload_count() > 0
                     ? pipeline.stats().reconstruction_task_seconds / pipeline.payload_count()
                     : 0.0},
      {"tasks", pipeline.stats().reconstruction_tasks}};
  report["stages"] = std::move(stages);
  report["payloads"] = pipeline.payload_count();
  report["mean_payload_pipeline_s"] = result.mean_payload_seconds;
  report["payload_accumulation_interval_s"] = result.mean_payload_interval;
  report["wall_s"] = result.wall_seconds;
  report["storage"] = {{"marteloscope_bytes", result.marteloscope_bytes},
                       {"cloud_bytes", result.cloud_bytes},
                       {"with_clouds_bytes", result.marteloscope_bytes + result.cloud_bytes},
                       {"without_clouds_bytes", result.marteloscope_bytes}};
  report["memory"] = {{"peak_rss_bytes", peak_rss_bytes()}};
  report["config_hash"] = cfg.hash();
  write_text_file(out_dir / "report.json", report.dump(2) + "\n");
  return cloud_bytes;
}

}  // namespace

namespace {

void replay_inputs(const SceneInputs& inputs, Pipeline& pipeline, double rt_factor) {
  if (inputs.trajectory.empty()) {
    throw input_error("run: empty trajectory");
  }
  std::unordered_map<int64_t, const StampedTransform*> poses;
  poses.reserve(inputs.trajectory.size());
  const auto key_of = [](double t) { return static_cast<int64_t>(std::llround(t * 1e6)); };
  for (const auto& s : inputs.trajectory) {
    poses[key_of(s.timestamp)] = &s;
  }
  size_t scan_index = 0;
  auto next_frame = [&]() -> std::optional<ScanFrame> {
    while (scan_index < inputs.scans.size()) {
      const auto& [stamp, path] = inputs.scans[scan_index];
      ++scan_index;
      auto it = poses.find(key_of(stamp));
      if (it == poses.end()) {
        throw input_error("run: no trajectory record for scan at " + std::to_string(stamp));
      }
      ScanFrame frame;
      frame.timestamp = it->second->timestamp;
      frame.sensor_pose = it->second->tf;
      frame.cloud = read_ply(path);
      frame.cloud.frame = FrameTag::sensor(frame.timestamp);
      return frame;
    }
    return std::nullopt;
  };
  replay(pipeline, next_frame, inputs.loop_closures, rt_factor);
  pipeline.finalize();
}

}  // namespace

RunResult run_scene_dir(const fs::path& scene_dir, const RunConfig& cfg, const fs::path& out_dir,
                        const RunOptions& options) {
  const SceneInputs inputs = open_scene(scene_dir);
  Pipeline pipeline(cfg, {.realign = options.realign});
  RunResult result;
  const double wall_start = now_seconds();
  replay_inputs(inputs, pipeline, cfg.runtime.rt_factor);

  result.wall_seconds = now_seconds() - wall_start;
  result.payload_count = pipeline.payload_count();
  result.mean_payload_seconds = pipeline.stats().mean_payload_seconds(pipeline.payload_count());
  result.mean_payload_interval = pipeline.mean_payload_interval();
  result.marteloscope_json = pipeline.marteloscope_json();
  result.tree_count = pipeline.export_trees().size();

  if (!inputs.ground_truth.empty()) {
    const auto truth = read_ground_truth(inputs.ground_truth);
    result.eval = evaluate(marteloscope_from_json(result.marteloscope_json), truth);
  }
  if (options.write_outputs) {
    write_run_outputs(out_dir, pipeline, result, cfg);
  }
  return result;
}

void replay_scene_dir(const fs::path& scene_dir, Pipeline& pipeline, const RunConfig& cfg) {
  const SceneInputs inputs = open_scene(scene_dir);
  replay_inputs(inputs, pipeline, cfg.runtime.rt_factor);
}

RunResult run_scene_memory(const SyntheticScene& scene, const RunConfig& cfg,
                           Pipeline* pipeline_out, const RunOptions& options) {
  std::unique_ptr<Pipeline> local_pipeline;
  if (!pipeline_out) {
    local_pipeline = std::make_unique<Pipeline>(cfg, PipelineOptions{.realign = options.realign});
  }
  Pipeline& pipeline = pipeline_out ? *pipeline_out : *local_pipeline;

  RunResult result;
  const double wall_start = now_seconds();
  size_t index = 0;
  auto next_frame = [&]() -> std::optional<ScanFrame> {
    if (index >= scene.frames.size()) {
      return std::nullopt;
    }
    return scene.frames[index++];
  };
  replay(pipeline, next_frame, scene.loop_closures, cfg.runtime.rt_factor);
  pipeline.finalize();

  result.wall_seconds = now_seconds() - wall_start;
  result.payload_count = pipeline.payload_count();
  result.mean_payload_seconds = pipeline.stats().mean_payload_seconds(pipeline.payload_count());
  result.mean_payload_interval = pipeline.mean_payload_interval();
  result.marteloscope_json = pipeline.marteloscope_json();
  result.tree_count = pipeline.export_trees().size();
  result.eval = evaluate(pipeline.export_trees(), scene.ground_truth);
  return result;
}

EvalReport evaluate_files(const fs::path& marteloscope_path, const fs::path& truth_path) {
  const auto estimates = marteloscope_from_json(read_text_file(marteloscope_path));
  const auto truth = read_ground_truth(truth_path);
  return evaluate(estimates, truth);
}

// --- fitter benchmark ---------------------------------------------------------

FitterBenchReport bench_fitters(const SliceSuiteSpec& suite, const ReconstructionConfig& cfg) {
  const auto slices = generate_slice_suite(suite);
  FitterBenchReport report;

  struct Fitter {
    std::string name;
    std::function<std::optional<CircleEstimate>(const Slice2D&, uint64_t)> fit;
  };
  const std::vector<Fitter> fitters = {
      {"Hough",
       [&](const Slice2D& s, uint64_t) { return classical_hough_fit(s, cfg); }},
      {"RANSAC",
       [&](const Slice2D& s, uint64_t seed) {
         Rng rng(seed);
         return ransac_fit(s, cfg, rng, false);
       }},
      {"RANSAC*",
       [&](const Slice2D& s, uint64_t seed) {
         Rng rng(seed);
         return ransac_fit(s, cfg, rng, true);
       }},
      {"RHT",
       [&](const Slice2D& s, uint64_t seed) {
         Rng rng(seed);
         return rht_fit(s, cfg, rng, nullptr);
       }},
  };

  for (size_t f = 0; f < fitters.size(); ++f) {
    FitterBenchRow row;
    row.name = fitters[f].name;
    row.slices = static_cast<int>(slices.size());
    double sq_sum = 0.0;
    int ok = 0;
    const double t0 = now_seconds();
    for (size_t s = 0; s < slices.size(); ++s) {
      const uint64_t seed = mix_seed(suite.seed, f + 1, s);
      const auto estimate = fitters[f].fit(slices[s].slice, seed);
      if (!estimate) {
        ++row.failures;
        continue;
      }
      const double diameter_error =
          2.0 * (estimate->circle.radius - slices[s].truth.radius);
      sq_sum += diameter_error * diameter_error;
      ++ok;
    }
    const double elapsed = now_seconds() - t0;
    row.rmse = ok > 0 ? std::sqrt(sq_sum / ok) : 0.0;
    row.mean_ms = slices.empty() ? 0.0 : 1000.0 * elapsed / static_cast<double>(slices.size());
    report.rows.push_back(std::move(row));
  }
  return report;
}

std::string FitterBenchReport::to_table() const {
  std::string out = "algorithm   RMSE [cm]   time [ms]   failures\n";
  out += "----------------------------------------------\n";
  char line[128];
  for (const auto& r : rows) {
    std::snprintf(line, sizeof(line), "%-10s %9.2f %11.2f %10d\n", r.name.c_str(),
                  100.0 * r.rmse, r.mean_ms, r.failures);
    out += line;
  }
  return out;
}

std::string FitterBenchReport::to_json() const {
  json doc = json::array();
  for (const auto& r : rows) {
    doc.push_back({{"algorithm", r.name},
                   {"rmse_m", r.rmse},
                   {"mean_ms", r.mean_ms},
                   {"failures", r.failures},
                   {"slices", r.slices}});
  }
  return doc.dump(2) + "\n";
}

// --- ablations -----------------------------------------------------------------

AblationComparison ablate_no_realign(const SyntheticScene& scene, const RunConfig& cfg) {
  AblationComparison cmp;
  const RunResult baseline =
      run_scene_memory(scene, cfg, nullptr, {.realign = true, .write_outputs = false});
  const RunResult variant =
      run_scene_memory(scene, cfg, nullptr, {.realign = false, .write_outputs = false});
  if (!baseline.eval || !variant.eval) {
    throw input_error("ablate: scene has no ground truth");
  }
  cmp.baseline = *baseline.eval;
  cmp.variant = *variant.eval;
  return cmp;
}

std::string AblationComparison::to_json() const {
  const auto report_json = [](const EvalReport& r) {
    json j;
    j["recall"] = r.recall;
    if (r.dbh) {
      j["dbh_rmse_m"] = r.dbh->rmse;
      j["dbh_bias_m"] = r.dbh->bias;
      j["dbh_std_m"] = r.dbh->std_dev;
    }
    j["stem_diameter_rmse_m"] = r.stem_curve.diameter_rmse;
    j["stem_center_rmse_m"] = r.stem_curve.center_rmse;
    j["matched"] = r.matched_count;
    return j;
  };
  json doc;
  doc["baseline"] = report_json(baseline);
  doc["variant"] = report_json(variant);
  return doc.dump(2) + "\n";
}

std::map<int, std::vector<double>> coverage_sweep(Pipeline& pipeline,
                                                  const std::vector<GroundTruthTree>& truth,
                                                  int bucket_deg) {
  std::map<int, std::vector<double>> buckets;
  const auto estimates = pipeline.export_trees();
  const auto matches = match_trees(estimates, truth, 1.0);
  const auto dtm = pipeline.global_dtm();
  const auto& cfg = pipeline.config();
  const double aperture_extra = cfg.tree_manager.aperture_extra_deg * M_PI / 180.0;

  for (const auto& match : matches) {
    const int instance_id = estimates[match.estimate_index].id;
    const auto it = pipeline.tree_manager().instances().find(instance_id);
    if (it == pipeline.tree_manager().instances().end()) {
      continue;
    }
    const TreeInstance& instance = it->second;
    if (instance.clusters.size() < 2) {
      continue;
    }
    // clusters in bearing order around the stem
    std::vector<size_t> order(instance.clusters.size());
    for (size_t i = 0; i < order.size(); ++i) {
      order[i] = i;
    }
    std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
      return instance.clusters[a].bearing < instance.clusters[b].bearing;
    });

    const auto& gt = truth[match.truth_index];
    for (int target = 40; target <= 360; target += bucket_deg) {
      // grow a contiguous arc of clusters until the target coverage
      std::vector<std::pair<double, double>> bearings;
      std::vector<MapCluster> subset;
      double achieved = 0.0;
      for (size_t i = 0; i < order.size(); ++i) {
        const StoredCluster& c = instance.clusters[order[i]];
        const double delta =
            std::atan2(std::max(c.axis_map.radius, 1e-6), std::max(c.sensor_distance, 1e-6)) +
            aperture_extra;
        bearings.emplace_back(c.bearing, delta);
        MapCluster mc;
        mc.cloud = transform_cloud(c.data.cloud, c.map_tf,
                                   FrameTag::sensor(c.data.payload_timestamp), FrameTag::map());
        mc.sensor_position = c.sensor_position;
        subset.push_back(std::move(mc));
        achieved = coverage_angle(bearings) * 180.0 / M_PI;
        if (achieved >= target) {
          break;
        }
      }
      if (achieved < target && target > 40) {
        break;  // cannot reach higher targets either
      }
      const uint64_t seed = mix_seed(cfg.runtime.seed, static_cast<uint64_t>(instance_id),
                                     static_cast<uint64_t>(target));
      const auto stem = reconstruct_stem(subset, {instance.map_axis.axis_point.x(),
                                                  instance.map_axis.axis_point.y()},
                                         *dtm, cfg.reconstruction, seed);
      if (!stem) {
        continue;
      }
      const TreeTraits traits = extract_traits(*stem, instance.max_point_z());
      const auto rmse = tree_diameter_rmse(traits.stem_curve, gt.stem_curve);
      if (!rmse) {
        continue;
      }
      const int bucket = std::min(340, static_cast<int>(achieved / bucket_deg) * bucket_deg);
      buckets[bucket].push_back(*rmse);
    }
  }
  return buckets;
}

std::string coverage_sweep_to_json(const std::map<int, std::vector<double>>& buckets) {
  json doc = json::array();
  for (const auto& [bucket, errors] : buckets) {
    std::vector<double> copy = errors;
    doc.push_back({{"bucket_deg", bucket},
                   {"count", errors.size()},
                   {"median_rmse_m", median(copy)}});
  }
  return doc.dump(2) + "\n";
}

double median(std::vector<double> values) {
  if (values.empty()) {
    return 0.0;
  }
  std::sort(values.begin(), values.end());
  const size_t n = values.size();
  return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

}  // namespace forestinv
