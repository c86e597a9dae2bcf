// Accumulates the 10 Hz scan stream into submaps ("payloads") spanning a
// fixed trajectory length, then downsamples and range-crops them.

#pragma once

#include <optional>
#include <vector>

#include "core/geometry.hpp"

namespace forestinv {

struct ScanFrame {
  double timestamp = 0.0;
  PointCloud cloud;           // sensor frame at `timestamp`
  RigidTransform sensor_pose;  // odometry map <- sensor
};

struct PayloadCloud {
  double center_timestamp = 0.0;
  PointCloud cloud;  // frame Sensor(center_timestamp), voxelized and cropped
  double trajectory_length = 0.0;
  std::vector<Vec3> sensor_path;  // per-frame sensor positions in the payload frame
};

struct PayloadConfig {
  double trigger_length = 20.0;   // L_pl
  double voxel_resolution = 0.01;
  double max_range = 20.0;  // r_pl, measured from the center sensor position
};

class PayloadAccumulator {
 public:
  explicit PayloadAccumulator(const PayloadConfig& cfg = {});

  /// Appends a frame; emits a payload once the buffered sensor path reaches
  /// the trigger length. Frames must arrive in strictly increasing time.
  std::optional<PayloadCloud> push_scan(const ScanFrame& frame);

  /// Emits whatever is buffered if its path length reaches `min_length`
  /// (e.g. half the trigger length at end of stream); otherwise discards.
  std::optional<PayloadCloud> flush(double min_length);

  size_t buffered_frames() const { return frames_.size(); }
  double buffered_length() const;

 private:
  PayloadCloud assemble() const;

  PayloadConfig cfg_;
  std::vector<ScanFrame> frames_;
  std::vector<double> cumulative_length_;  // per buffered frame
  double last_timestamp_ = 0.0;
  bool has_last_ = false;
};

/// Wall-clock budget downstream stages must beat for real-time operation:
/// the time the sensor spends accumulating this payload.
double payload_budget(const PayloadCloud& payload, double avg_speed);

}  // namespace forestinv
