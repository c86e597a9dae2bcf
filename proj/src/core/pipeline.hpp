// Streaming engine: scan frames in, payloads accumulated, terrain and
// segmentation per payload, instance association and realignment against the
// pose graph, reconstruction on a worker pool, exports at the end.

#pragma once

#include <condition_variable>
#include <deque>
#include <memory>
#include <mutex>
#include <thread>
#include <vector>

#include "core/config.hpp"
#include "core/io.hpp"
#include "core/metrics.hpp"
#include "core/payload.hpp"
#include "core/pipeline_stats.hpp"
#include "core/pose_graph.hpp"
#include "core/terrain.hpp"
#include "core/tree_manager.hpp"

namespace forestinv {

struct PipelineOptions {
  bool realign = true;  // false reproduces the no-trajectory-updates ablation
};

class Pipeline {
 public:
  explicit Pipeline(const RunConfig& cfg, const PipelineOptions& options = {});
  ~Pipeline();

  Pipeline(const Pipeline&) = delete;
  Pipeline& operator=(const Pipeline&) = delete;

  /// Ingests one scan frame: inserts its pose, accumulates the payload
  /// buffer, and processes any completed payload.
  void push_scan(const ScanFrame& frame);

  /// Applies a correction batch to the pose graph. Stored clusters realign
  /// at the next payload boundary (or finalize).
  void apply_loop_closure(const LoopClosureEvent& event);

  /// Flushes the tail payload, applies the final realignment, and runs the
  /// reconstruction pass to a deterministic final state.
  void finalize();

  std::vector<EstimatedTree> export_trees() const;
  std::string marteloscope_json() const;

  const TreeManager& tree_manager() const { return tree_manager_; }
  TreeManager& tree_manager() { return tree_manager_; }
  const PoseGraph& pose_graph() const { return pose_graph_; }
  std::shared_ptr<const GlobalDTM> global_dtm() const;
  const PipelineStats& stats() const { return stats_; }
  const RunConfig& config() const { return cfg_; }
  size_t payload_count() const { return payload_count_; }

  /// Mean wall-clock interval between consecutive payload emissions
  /// (simulated time), i.e. the accumulation budget.
  double mean_payload_interval() const;

 private:
  struct ReconstructionTask {
    int instance_id = 0;
    uint64_t fingerprint = 0;
    uint64_t seed = 0;
    std::vector<MapCluster> clusters;
    Vec2 stem_xy = Vec2::Zero();
    double max_point_z = 0.0;
    std::shared_ptr<const GlobalDTM> terrain;
  };
  struct ReconstructionResult {
    int instance_id = 0;
    uint64_t fingerprint = 0;
    std::optional<StemModel> stem;
    std::optional<TreeTraits> traits;
    double task_seconds = 0.0;
  };

  void process_payload(const PayloadCloud& payload);
  void maybe_realign();
  void rebuild_global_dtm();
  void issue_reconstructions();
  void drain_results(bool wait_for_all);
  void worker_loop();
  void run_task(const ReconstructionTask& task);

  RunConfig cfg_;
  PipelineOptions options_;
  PoseGraph pose_graph_;
  PayloadAccumulator accumulator_;
  TreeManager tree_manager_;

  struct LocalDtmRecord {
    TerrainMesh mesh;  // map frame at build time
    double payload_timestamp = 0.0;
    RigidTransform build_tf;
  };
  std::vector<LocalDtmRecord> local_dtms_;

  mutable std::mutex dtm_mutex_;
  std::shared_ptr<const GlobalDTM> global_dtm_;

  uint64_t last_realign_revision_ = 0;
  size_t payload_count_ = 0;
  double first_payload_time_ = 0.0;
  double last_payload_time_ = 0.0;

  PipelineStats stats_;

  // worker pool
  std::vector<std::thread> workers_;
  std::mutex queue_mutex_;
  std::condition_variable queue_cv_;
  std::deque<ReconstructionTask> task_queue_;
  size_t tasks_in_flight_ = 0;
  std::mutex results_mutex_;
  std::condition_variable results_cv_;
  std::vector<ReconstructionResult> results_;
  bool shutdown_ = false;
};

}  // namespace forestinv
