#include "core/payload.hpp"

#include <algorithm>

namespace forestinv {

PayloadAccumulator::PayloadAccumulator(const PayloadConfig& cfg) : cfg_(cfg) {
  if (!(cfg.trigger_length > 0.0) || !(cfg.voxel_resolution > 0.0) || !(cfg.max_range > 0.0)) {
    throw invalid_argument_error("PayloadConfig: lengths and resolution must be > 0");
  }
}

double PayloadAccumulator::buffered_length() const {
  return cumulative_length_.empty() ? 0.0 : cumulative_length_.back();
}

std::optional<PayloadCloud> PayloadAccumulator::push_scan(const ScanFrame& frame) {
  if (has_last_ && frame.timestamp <= last_timestamp_) {
    throw ordering_error("push_scan: timestamp " + std::to_string(frame.timestamp) +
                         " not greater than previous " + std::to_string(last_timestamp_));
  }
  last_timestamp_ = frame.timestamp;
  has_last_ = true;

  double length = 0.0;
  if (!frames_.empty()) {
    length = cumulative_length_.back() +
             (frame.sensor_pose.translation - frames_.back().sensor_pose.translation).norm();
  }
  frames_.push_back(frame);
  cumulative_length_.push_back(length);

  if (length >= cfg_.trigger_length) {
    PayloadCloud payload = assemble();
    frames_.clear();
    cumulative_length_.clear();
    return payload;
  }
  return std::nullopt;
}

std::optional<PayloadCloud> PayloadAccumulator::flush(double min_length) {
  if (frames_.empty() || buffered_length() < min_length || frames_.size() < 2) {
    frames_.clear();
    cumulative_length_.clear();
    return std::nullopt;
  }
  PayloadCloud payload = assemble();
  frames_.clear();
  cumulative_length_.clear();
  return payload;
}

PayloadCloud PayloadAccumulator::assemble() const {
  const double total_length = cumulative_length_.back();

  // Center frame: the first frame whose cumulative path length reaches half
  // the trigger length (half the buffered length for short flushed tails).
  size_t center = 0;
  const double half = 0.5 * std::min(cfg_.trigger_length, total_length);
  while (center + 1 < frames_.size() && cumulative_length_[center] < half) {
    ++center;
  }
  const ScanFrame& center_frame = frames_[center];
  const RigidTransform center_inv = center_frame.sensor_pose.inverse();

  PayloadCloud payload;
  payload.center_timestamp = center_frame.timestamp;
  payload.trajectory_length = total_length;

  PointCloud merged(FrameTag::sensor(center_frame.timestamp));
  size_t total_points = 0;
  for (const auto& f : frames_) {
    total_points += f.cloud.size();
  }
  merged.reserve(total_points);
  payload.sensor_path.reserve(frames_.size());

  for (const auto& f : frames_) {
    const RigidTransform into_payload = center_inv.compose(f.sensor_pose);
    const Eigen::Matrix3d R = into_payload.rotation.toRotationMatrix();
    for (const auto& p : f.cloud.points) {
      merged.push_back(R * p + into_payload.translation);
    }
    payload.sensor_path.push_back(into_payload.translation);
  }

  // Crop from the center sensor position (the payload frame origin), then
  // voxelize the survivors.
  PointCloud cropped = range_crop(merged, Vec3::Zero(), cfg_.max_range);
  payload.cloud = voxel_downsample(cropped, cfg_.voxel_resolution);
  return payload;
}

double payload_budget(const PayloadCloud& payload, double avg_speed) {
  if (!(avg_speed > 0.0)) {
    throw invalid_argument_error("payload_budget: avg_speed must be > 0");
  }
  return payload.trajectory_length / avg_speed;
}

}  // namespace forestinv
