// Implementation of the extern-C shared-library surface declared in
// include/forest_inventory.h. Exceptions from the core are mapped to status
// codes; the message lands in a thread-local buffer.

#include "forest_inventory.h"

#include <cstdlib>
#include <cstring>
#include <string>

#include "core/config.hpp"
#include "core/error.hpp"
#include "core/io.hpp"
#include "core/pipeline.hpp"
#include "core/runner.hpp"
#include "core/synth.hpp"

namespace {

thread_local std::string g_last_error;

fi_status to_status(forestinv::ErrorCode code) {
  using forestinv::ErrorCode;
  switch (code) {
    case ErrorCode::InvalidArgument:
      return FI_ERROR_INVALID_ARGUMENT;
    case ErrorCode::Ordering:
      return FI_ERROR_ORDERING;
    case ErrorCode::Lookup:
      return FI_ERROR_LOOKUP;
    case ErrorCode::FrameMismatch:
      return FI_ERROR_FRAME_MISMATCH;
    case ErrorCode::Coverage:
      return FI_ERROR_COVERAGE;
    case ErrorCode::Input:
      return FI_ERROR_INPUT;
    case ErrorCode::Io:
      return FI_ERROR_IO;
    case ErrorCode::Internal:
      return FI_ERROR_INTERNAL;
  }
  return FI_ERROR_INTERNAL;
}

template <typename Fn>
fi_status guarded(Fn&& fn) {
  try {
    fn();
    g_last_error.clear();
    return FI_OK;
  } catch (const forestinv::Error& e) {
    g_last_error = e.what();
    return to_status(e.code());
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return FI_ERROR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown error";
    return FI_ERROR_INTERNAL;
  }
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out) {
    std::memcpy(out, s.c_str(), s.size() + 1);
  }
  return out;
}

forestinv::RunConfig parse_config(const char* config_json) {
  if (!config_json || config_json[0] == '\0') {
    return forestinv::RunConfig{};
  }
  return forestinv::RunConfig::from_json(config_json);
}

}  // namespace

struct fi_engine {
  forestinv::RunConfig config;
  forestinv::Pipeline pipeline;
  bool finalized = false;

  explicit fi_engine(const forestinv::RunConfig& cfg) : config(cfg), pipeline(cfg) {}
};

extern "C" {

const char* fi_version(void) { return "1.0.0"; }

const char* fi_status_name(fi_status status) {
  switch (status) {
    case FI_OK:
      return "ok";
    case FI_ERROR_INVALID_ARGUMENT:
      return "invalid argument";
    case FI_ERROR_ORDERING:
      return "ordering error";
    case FI_ERROR_LOOKUP:
      return "lookup error";
    case FI_ERROR_FRAME_MISMATCH:
      return "frame mismatch";
    case FI_ERROR_COVERAGE:
      return "coverage error";
    case FI_ERROR_INPUT:
      return "input error";
    case FI_ERROR_IO:
      return "io error";
    case FI_ERROR_INTERNAL:
      return "internal error";
  }
  return "unknown";
}

const char* fi_last_error(void) { return g_last_error.c_str(); }

void fi_string_free(char* s) { std::free(s); }

fi_status fi_default_config(char** json_out) {
  if (!json_out) {
    g_last_error = "json_out is null";
    return FI_ERROR_INVALID_ARGUMENT;
  }
  return guarded([&] { *json_out = dup_string(forestinv::RunConfig{}.to_json()); });
}

fi_status fi_config_override(const char* config_json, const char* assignment, char** json_out) {
  if (!config_json || !assignment || !json_out) {
    g_last_error = "null argument";
    return FI_ERROR_INVALID_ARGUMENT;
  }
  return guarded([&] {
    forestinv::RunConfig cfg = parse_config(config_json);
    cfg.apply_override(assignment);
    *json_out = dup_string(cfg.to_json());
  });
}

fi_status fi_generate_scene(const char* spec_json, const char* out_dir) {
  if (!spec_json || !out_dir) {
    g_last_error = "null argument";
    return FI_ERROR_INVALID_ARGUMENT;
  }
  return guarded([&] {
    const auto spec = forestinv::scene_spec_from_json(spec_json);
    const auto scene = forestinv::generate_scene(spec);
    forestinv::write_scene(out_dir, scene);
  });
}

fi_status fi_run(const char* scene_dir, const char* config_json, const char* out_dir,
                 int no_realign) {
  if (!scene_dir || !out_dir) {
    g_last_error = "null argument";
    return FI_ERROR_INVALID_ARGUMENT;
  }
  return guarded([&] {
    const forestinv::RunConfig cfg = parse_config(config_json);
    forestinv::RunOptions options;
    options.realign = no_realign == 0;
    forestinv::run_scene_dir(scene_dir, cfg, out_dir, options);
  });
}

fi_status fi_evaluate(const char* marteloscope_path, const char* truth_path,
                      char** report_json_out, char** report_table_out) {
  if (!marteloscope_path || !truth_path) {
    g_last_error = "null argument";
    return FI_ERROR_INVALID_ARGUMENT;
  }
  return guarded([&] {
    const auto report = forestinv::evaluate_files(marteloscope_path, truth_path);
    if (report_json_out) {
      // compact JSON mirror of the table
      std::string json = "{\n";
      json += "  \"recall\": " + std::to_string(report.recall) + ",\n";
      if (report.dbh) {
        json += "  \"dbh_rmse_m\": " + std::to_string(report.dbh->rmse) + ",\n";
        json += "  \"dbh_bias_m\": " + std::to_string(report.dbh->bias) + ",\n";
        json += "  \"dbh_std_m\": " + std::to_string(report.dbh->std_dev) + ",\n";
      }
      json += "  \"stem_diameter_rmse_m\": " + std::to_string(report.stem_curve.diameter_rmse) +
              ",\n";
      json += "  \"stem_center_rmse_m\": " + std::to_string(report.stem_curve.center_rmse) + ",\n";
      json += "  \"matched\": " + std::to_string(report.matched_count) + ",\n";
      json += "  \"truth_count\": " + std::to_string(report.truth_count) + ",\n";
      json += "  \"estimate_count\": " + std::to_string(report.estimate_count) + "\n}\n";
      *report_json_out = dup_string(json);
    }
    if (report_table_out) {
      *report_table_out = dup_string(forestinv::format_report_table(report));
    }
  });
}

fi_status fi_bench_fitters(const char* suite_json, const char* config_json,
                           char** report_json_out, char** report_table_out) {
  return guarded([&] {
    forestinv::SliceSuiteSpec suite;
    if (suite_json && suite_json[0] != '\0') {
      suite = forestinv::slice_suite_from_json(suite_json);
    }
    forestinv::ReconstructionConfig cfg = parse_config(config_json).reconstruction;
    const auto report = forestinv::bench_fitters(suite, cfg);
    if (report_json_out) {
      *report_json_out = dup_string(report.to_json());
    }
    if (report_table_out) {
      *report_table_out = dup_string(report.to_table());
    }
  });
}

fi_status fi_ablate_no_realign(const char* scene_dir, const char* config_json,
                               char** comparison_json_out) {
  if (!scene_dir || !comparison_json_out) {
    g_last_error = "null argument";
    return FI_ERROR_INVALID_ARGUMENT;
  }
  return guarded([&] {
    const forestinv::RunConfig cfg = parse_config(config_json);
    forestinv::RunOptions base_options;
    base_options.realign = true;
    base_options.write_outputs = false;
    forestinv::RunOptions variant_options = base_options;
    variant_options.realign = false;
    const auto baseline =
        forestinv::run_scene_dir(scene_dir, cfg, std::filesystem::path{}, base_options);
    const auto variant =
        forestinv::run_scene_dir(scene_dir, cfg, std::filesystem::path{}, variant_options);
    if (!baseline.eval || !variant.eval) {
      throw forestinv::input_error("ablate: scene has no ground_truth.json");
    }
    forestinv::AblationComparison cmp;
    cmp.baseline = *baseline.eval;
    cmp.variant = *variant.eval;
    *comparison_json_out = dup_string(cmp.to_json());
  });
}

fi_status fi_ablate_coverage_sweep(const char* scene_dir, const char* config_json,
                                   char** buckets_json_out) {
  if (!scene_dir || !buckets_json_out) {
    g_last_error = "null argument";
    return FI_ERROR_INVALID_ARGUMENT;
  }
  return guarded([&] {
    const forestinv::RunConfig cfg = parse_config(config_json);
    const auto inputs = forestinv::open_scene(scene_dir);
    if (inputs.ground_truth.empty()) {
      throw forestinv::input_error("coverage sweep: scene has no ground_truth.json");
    }
    const auto truth = forestinv::read_ground_truth(inputs.ground_truth);

    forestinv::Pipeline pipeline(cfg);
    // replay through the pipeline, keeping it alive for the sweep
    forestinv::RunOptions options;
    options.write_outputs = false;
    forestinv::replay_scene_dir(scene_dir, pipeline, cfg);
    const auto buckets = forestinv::coverage_sweep(pipeline, truth);
    *buckets_json_out = dup_string(forestinv::coverage_sweep_to_json(buckets));
  });
}

fi_status fi_engine_create(const char* config_json, fi_engine** engine_out) {
  if (!engine_out) {
    g_last_error = "engine_out is null";
    return FI_ERROR_INVALID_ARGUMENT;
  }
  *engine_out = nullptr;
  return guarded([&] {
    const forestinv::RunConfig cfg = parse_config(config_json);
    *engine_out = new fi_engine(cfg);
  });
}

void fi_engine_destroy(fi_engine* engine) { delete engine; }

fi_status fi_engine_push_scan(fi_engine* engine, double timestamp, const double pose_qxyzw[4],
                              const double pose_txyz[3], const float* xyz, size_t point_count) {
  if (!engine || !pose_qxyzw || !pose_txyz || (!xyz && point_count > 0)) {
    g_last_error = "null argument";
    return FI_ERROR_INVALID_ARGUMENT;
  }
  return guarded([&] {
    forestinv::ScanFrame frame;
    frame.timestamp = timestamp;
    frame.sensor_pose.rotation =
        Eigen::Quaterniond(pose_qxyzw[3], pose_qxyzw[0], pose_qxyzw[1], pose_qxyzw[2])
            .normalized();
    frame.sensor_pose.translation = {pose_txyz[0], pose_txyz[1], pose_txyz[2]};
    frame.cloud.frame = forestinv::FrameTag::sensor(timestamp);
    frame.cloud.reserve(point_count);
    for (size_t i = 0; i < point_count; ++i) {
      frame.cloud.push_back({xyz[3 * i + 0], xyz[3 * i + 1], xyz[3 * i + 2]});
    }
    engine->pipeline.push_scan(frame);
  });
}

fi_status fi_engine_apply_loop_closure(fi_engine* engine, double t_start, double t_end,
                                       const double* timestamps, const double* poses,
                                       size_t count) {
  if (!engine || (count > 0 && (!timestamps || !poses))) {
    g_last_error = "null argument";
    return FI_ERROR_INVALID_ARGUMENT;
  }
  return guarded([&] {
    forestinv::LoopClosureEvent event;
    event.kind = forestinv::LoopClosureEvent::Kind::Absolute;
    event.t_start = t_start;
    event.t_end = t_end;
    event.corrections.reserve(count);
    for (size_t i = 0; i < count; ++i) {
      forestinv::StampedTransform s;
      s.timestamp = timestamps[i];
      const double* p = poses + 7 * i;
      s.tf.rotation = Eigen::Quaterniond(p[3], p[0], p[1], p[2]).normalized();
      s.tf.translation = {p[4], p[5], p[6]};
      event.corrections.push_back(s);
    }
    engine->pipeline.apply_loop_closure(event);
  });
}

fi_status fi_engine_finalize(fi_engine* engine) {
  if (!engine) {
    g_last_error = "engine is null";
    return FI_ERROR_INVALID_ARGUMENT;
  }
  return guarded([&] {
    engine->pipeline.finalize();
    engine->finalized = true;
  });
}

fi_status fi_engine_tree_count(fi_engine* engine, size_t* count_out) {
  if (!engine || !count_out) {
    g_last_error = "null argument";
    return FI_ERROR_INVALID_ARGUMENT;
  }
  return guarded([&] { *count_out = engine->pipeline.export_trees().size(); });
}

fi_status fi_engine_payload_count(fi_engine* engine, size_t* count_out) {
  if (!engine || !count_out) {
    g_last_error = "null argument";
    return FI_ERROR_INVALID_ARGUMENT;
  }
  return guarded([&] { *count_out = engine->pipeline.payload_count(); });
}

fi_status fi_engine_marteloscope(fi_engine* engine, char** json_out) {
  if (!engine || !json_out) {
    g_last_error = "null argument";
    return FI_ERROR_INVALID_ARGUMENT;
  }
  return guarded([&] { *json_out = dup_string(engine->pipeline.marteloscope_json()); });
}

}  // extern "C"
