// Per-stage timing accounting across payloads (mean and standard deviation),
// mirroring the pipeline's module breakdown.

#pragma once

#include <cmath>
#include <map>
#include <string>
#include <vector>

namespace forestinv {

struct StageAccumulator {
  std::vector<double> samples;

  void add(double seconds) { samples.push_back(seconds); }
  double mean() const {
    if (samples.empty()) {
      return 0.0;
    }
    double sum = 0.0;
    for (double s : samples) {
      sum += s;
    }
    return sum / static_cast<double>(samples.size());
  }
  double stddev() const {
    if (samples.size() < 2) {
      return 0.0;
    }
    const double m = mean();
    double var = 0.0;
    for (double s : samples) {
      var += (s - m) * (s - m);
    }
    return std::sqrt(var / static_cast<double>(samples.size()));
  }
};

struct PipelineStats {
  // stage name -> per-payload durations
  std::map<std::string, StageAccumulator> stages;
  double reconstruction_task_seconds = 0.0;  // summed wall time of worker tasks
  size_t reconstruction_tasks = 0;

  void add(const std::string& stage, double seconds) { stages[stage].add(seconds); }

  /// Serial per-payload mean: the sum of all stage means plus the average
  /// reconstruction work attributed per payload.
  double mean_payload_seconds(size_t payload_count) const {
    double total = 0.0;
    for (const auto& [name, acc] : stages) {
      total += acc.mean();
    }
    if (payload_count > 0) {
      total += reconstruction_task_seconds / static_cast<double>(payload_count);
    }
    return total;
  }
};

}  // namespace forestinv
