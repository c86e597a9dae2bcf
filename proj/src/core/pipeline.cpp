#include "core/pipeline.hpp"

#include <algorithm>
#include <chrono>

#include "core/rng.hpp"
#include "core/segmentation.hpp"

namespace forestinv {

namespace {

double now_seconds() {
  return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

}  // namespace

Pipeline::Pipeline(const RunConfig& cfg, const PipelineOptions& options)
    : cfg_(cfg), options_(options), accumulator_(cfg.payload) {
  auto dtm = std::make_shared<GlobalDTM>();
  dtm->grid_resolution = cfg_.runtime.global_dtm_resolution;
  global_dtm_ = std::move(dtm);
  const int worker_count = std::max(1, cfg_.runtime.workers);
  workers_.reserve(worker_count);
  for (int i = 0; i < worker_count; ++i) {
    workers_.emplace_back([this] { worker_loop(); });
  }
}

Pipeline::~Pipeline() {
  {
    std::unique_lock lock(queue_mutex_);
    shutdown_ = true;
  }
  queue_cv_.notify_all();
  for (auto& w : workers_) {
    if (w.joinable()) {
      w.join();
    }
  }
}

void Pipeline::push_scan(const ScanFrame& frame) {
  pose_graph_.insert_pose(frame.timestamp, frame.sensor_pose);
  const double t0 = now_seconds();
  auto payload = accumulator_.push_scan(frame);
  stats_.add("payload", now_seconds() - t0);
  if (payload) {
    process_payload(*payload);
  }
}

void Pipeline::apply_loop_closure(const LoopClosureEvent& event) {
  pose_graph_.apply_loop_closure(event);
}

void Pipeline::process_payload(const PayloadCloud& payload) {
  if (payload_count_ == 0) {
    first_payload_time_ = payload.center_timestamp;
  }
  last_payload_time_ = payload.center_timestamp;
  ++payload_count_;

  const RigidTransform tf = pose_graph_.lookup(payload.center_timestamp);
  const PointCloud map_cloud = transform_cloud(
      payload.cloud, tf, FrameTag::sensor(payload.center_timestamp), FrameTag::map());
  if (map_cloud.empty()) {
    return;
  }

  // local terrain model
  const double t_terrain = now_seconds();
  TerrainMesh local = cloth_simulation_filter(map_cloud, cfg_.csf, tf.translation);
  {
    auto dtm = std::make_shared<GlobalDTM>(*global_dtm());
    fuse_local_dtm(*dtm, local, RigidTransform::identity());
    std::lock_guard lock(dtm_mutex_);
    global_dtm_ = std::move(dtm);
  }
  local_dtms_.push_back({local, payload.center_timestamp, tf});
  stats_.add("terrain", now_seconds() - t_terrain);

  // segmentation
  const double t_seg = now_seconds();
  const uint64_t payload_seed = mix_seed(cfg_.runtime.seed, payload_count_);
  SegmentationResult segmentation = segment_payload(map_cloud, local, tf,
                                                    payload.center_timestamp, cfg_.segmentation,
                                                    cfg_.reconstruction, payload_seed);
  stats_.add("segmentation", now_seconds() - t_seg);

  // association + realignment
  const double t_tm = now_seconds();
  for (const auto& cluster : segmentation.clusters) {
    tree_manager_.associate_cluster(cluster, tf);
  }
  maybe_realign();
  stats_.add("tree_manager", now_seconds() - t_tm);

  issue_reconstructions();
  drain_results(false);
}

void Pipeline::maybe_realign() {
  const uint64_t revision = pose_graph_.revision();
  if (revision == last_realign_revision_) {
    return;
  }
  last_realign_revision_ = revision;
  if (!options_.realign) {
    return;
  }
  const PoseGraphSnapshot snapshot = pose_graph_.snapshot();
  const size_t moved = tree_manager_.realign_all(snapshot);
  if (moved > 0) {
    rebuild_global_dtm();
  }
}

void Pipeline::rebuild_global_dtm() {
  auto dtm = std::make_shared<GlobalDTM>();
  dtm->grid_resolution = cfg_.runtime.global_dtm_resolution;
  const PoseGraphSnapshot snapshot = pose_graph_.snapshot();
  for (const auto& record : local_dtms_) {
    RigidTransform delta = RigidTransform::identity();
    if (const RigidTransform* current = snapshot.find(record.payload_timestamp)) {
      delta = current->compose(record.build_tf.inverse());
    }
    fuse_local_dtm(*dtm, record.mesh, delta);
  }
  std::lock_guard lock(dtm_mutex_);
  global_dtm_ = std::move(dtm);
}

std::shared_ptr<const GlobalDTM> Pipeline::global_dtm() const {
  std::lock_guard lock(dtm_mutex_);
  return global_dtm_;
}

void Pipeline::issue_reconstructions() {
  const std::vector<int> ids = tree_manager_.request_reconstructions();
  if (ids.empty()) {
    return;
  }
  auto terrain = global_dtm();
  std::unique_lock lock(queue_mutex_);
  for (int id : ids) {
    const TreeInstance& instance = tree_manager_.instances().at(id);
    ReconstructionTask task;
    task.instance_id = id;
    task.fingerprint = instance.fingerprint();
    task.seed = mix_seed(cfg_.runtime.seed, static_cast<uint64_t>(id), task.fingerprint);
    task.clusters = instance.map_clusters();
    task.stem_xy = {instance.map_axis.axis_point.x(), instance.map_axis.axis_point.y()};
    task.max_point_z = instance.max_point_z();
    task.terrain = terrain;
    task_queue_.push_back(std::move(task));
    ++tasks_in_flight_;
  }
  lock.unlock();
  queue_cv_.notify_all();
}

void Pipeline::worker_loop() {
  for (;;) {
    ReconstructionTask task;
    {
      std::unique_lock lock(queue_mutex_);
      queue_cv_.wait(lock, [this] { return shutdown_ || !task_queue_.empty(); });
      if (shutdown_ && task_queue_.empty()) {
        return;
      }
      task = std::move(task_queue_.front());
      task_queue_.pop_front();
    }
    run_task(task);
  }
}

void Pipeline::run_task(const ReconstructionTask& task) {
  const double t0 = now_seconds();
  ReconstructionResult result;
  result.instance_id = task.instance_id;
  result.fingerprint = task.fingerprint;
  try {
    result.stem = reconstruct_stem(task.clusters, task.stem_xy, *task.terrain,
                                   cfg_.reconstruction, task.seed);
    if (result.stem) {
      result.traits = extract_traits(*result.stem, task.max_point_z);
    }
  } catch (const Error&) {
    result.stem.reset();
    result.traits.reset();
  }
  result.task_seconds = now_seconds() - t0;
  {
    std::lock_guard lock(results_mutex_);
    results_.push_back(std::move(result));
  }
  {
    std::lock_guard lock(queue_mutex_);
    --tasks_in_flight_;
  }
  results_cv_.notify_all();
}

void Pipeline::drain_results(bool wait_for_all) {
  if (wait_for_all) {
    std::unique_lock lock(queue_mutex_);
    results_cv_.wait(lock, [this] { return tasks_in_flight_ == 0 && task_queue_.empty(); });
  }
  std::vector<ReconstructionResult> batch;
  {
    std::lock_guard lock(results_mutex_);
    batch.swap(results_);
  }
  for (auto& r : batch) {
    stats_.reconstruction_task_seconds += r.task_seconds;
    stats_.reconstruction_tasks += 1;
    if (r.stem) {
      tree_manager_.commit_reconstruction(r.instance_id, std::move(r.stem), std::move(r.traits),
                                          r.fingerprint);
    } else {
      tree_manager_.commit_failure(r.instance_id, r.fingerprint);
    }
  }
}

void Pipeline::finalize() {
  if (auto tail = accumulator_.flush(cfg_.runtime.flush_min_length)) {
    process_payload(*tail);
  }
  drain_results(true);

  // final realignment against the latest graph, then rebuild the terrain
  if (options_.realign) {
    const PoseGraphSnapshot snapshot = pose_graph_.snapshot();
    tree_manager_.realign_all(snapshot);
    rebuild_global_dtm();
    last_realign_revision_ = snapshot.revision;
  }

  // deterministic final reconstruction state: keep issuing until nothing is
  // dirty and gated
  for (int round = 0; round < 4; ++round) {
    issue_reconstructions();
    drain_results(true);
  }
}

std::vector<EstimatedTree> Pipeline::export_trees() const {
  std::vector<EstimatedTree> trees;
  const auto dtm = global_dtm();
  for (const auto& [id, instance] : tree_manager_.instances()) {
    if (static_cast<int>(instance.clusters.size()) < cfg_.runtime.export_min_clusters) {
      continue;
    }
    EstimatedTree tree;
    tree.id = id;
    tree.coverage_angle = instance.coverage.coverage_angle;
    tree.cluster_count = static_cast<int>(instance.clusters.size());

    double base_z = instance.map_axis.axis_point.z() - cfg_.tree_manager.reference_height;
    if (dtm->covered(instance.map_axis.axis_point.x(), instance.map_axis.axis_point.y())) {
      base_z = terrain_height_at(*dtm, instance.map_axis.axis_point.x(),
                                 instance.map_axis.axis_point.y());
    }
    tree.base = {instance.map_axis.axis_point.x(), instance.map_axis.axis_point.y(), base_z};

    if (instance.reconstruction && instance.traits) {
      const auto& stem = *instance.reconstruction;
      const auto& traits = *instance.traits;
      tree.dbh = traits.dbh;
      tree.stem_curve = traits.stem_curve;
      tree.tree_height = traits.tree_height;
      tree.reconstructed_stem_height = traits.reconstructed_stem_height;
      // prefer the reconstructed base position at the lowest circle
      tree.base.x() = stem.circles.front().circle.cx;
      tree.base.y() = stem.circles.front().circle.cy;
      tree.base.z() = stem.base_height;
    }
    trees.push_back(std::move(tree));
  }
  return trees;
}

std::string Pipeline::marteloscope_json() const {
  return marteloscope_to_json(export_trees(), cfg_.hash(), pose_graph_.revision(),
                              cfg_.runtime.seed);
}

double Pipeline::mean_payload_interval() const {
  if (payload_count_ < 2) {
    return 0.0;
  }
  return (last_payload_time_ - first_payload_time_) /
         static_cast<double>(payload_count_ - 1);
}

}  // namespace forestinv
