// Run configuration: every tunable of the pipeline grouped by module, with a
// strict JSON loader (unknown keys rejected, every value range-checked), a
// dotted-path override mechanism, and a stable content hash for provenance.

#pragma once

#include <cstdint>
#include <string>

#include "core/payload.hpp"
#include "core/reconstruction.hpp"
#include "core/segmentation.hpp"
#include "core/terrain.hpp"
#include "core/tree_manager.hpp"

namespace forestinv {

struct RuntimeConfig {
  uint64_t seed = 1;
  double rt_factor = 0.0;  // 0 = replay as fast as possible, 1 = real time
  int workers = 2;
  bool store_clouds = false;
  int export_min_clusters = 2;  // instances below this are not exported
  double flush_min_length = 10.0;  // emit the tail payload if at least this long
  double global_dtm_resolution = 0.25;
};

struct RunConfig {
  PayloadConfig payload;
  CSFParams csf;
  SegmentationConfig segmentation;
  TreeManagerConfig tree_manager;
  ReconstructionConfig reconstruction;
  RuntimeConfig runtime;

  /// Full JSON round-trip (all keys always present).
  std::string to_json() const;

  /// Strict parse: unknown keys and out-of-range values are errors.
  static RunConfig from_json(const std::string& text);

  /// Applies a `section.key=value` override.
  void apply_override(const std::string& assignment);

  /// Stable FNV-1a hash of the canonical JSON dump.
  std::string hash() const;
};

}  // namespace forestinv
