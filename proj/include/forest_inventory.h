/* forest_inventory — C API for the online forest inventory pipeline.
 *
 * The library reconstructs a forest inventory (terrain model, per-tree stem
 * models, tree traits) from mobile-laser-scanning payload clouds and a
 * time-varying pose graph, either by replaying a scene directory or by
 * streaming scans through an engine handle.
 *
 * All functions return fi_status; FI_OK is 0. Strings returned through
 * char** out-parameters are heap-allocated and must be released with
 * fi_string_free. fi_last_error() describes the most recent failure on the
 * calling thread.
 */

#ifndef FOREST_INVENTORY_H
#define FOREST_INVENTORY_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define FI_API __declspec(dllexport)
#else
#define FI_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum fi_status {
  FI_OK = 0,
  FI_ERROR_INVALID_ARGUMENT = 1,
  FI_ERROR_ORDERING = 2,
  FI_ERROR_LOOKUP = 3,
  FI_ERROR_FRAME_MISMATCH = 4,
  FI_ERROR_COVERAGE = 5,
  FI_ERROR_INPUT = 6,
  FI_ERROR_IO = 7,
  FI_ERROR_INTERNAL = 8
} fi_status;

FI_API const char* fi_version(void);
FI_API const char* fi_status_name(fi_status status);
FI_API const char* fi_last_error(void);
FI_API void fi_string_free(char* s);

/* ---- configuration ------------------------------------------------------ */

/* Full default run configuration as JSON. */
FI_API fi_status fi_default_config(char** json_out);

/* Applies one `section.key=value` override to a configuration JSON and
 * returns the updated document. */
FI_API fi_status fi_config_override(const char* config_json, const char* assignment,
                                    char** json_out);

/* ---- whole-run entry points --------------------------------------------- */

/* Generates a synthetic scene (scans/, trajectory.txt, loopclosures.txt,
 * ground_truth.json, scene.json) under out_dir from a scene spec JSON. */
FI_API fi_status fi_generate_scene(const char* spec_json, const char* out_dir);

/* Replays a scene directory through the pipeline; writes marteloscope.json,
 * global_dtm.ply, global_dtm_grid.txt and report.json under out_dir.
 * `no_realign` disables the tree manager's trajectory updates (the pose
 * graph still receives loop closures). */
FI_API fi_status fi_run(const char* scene_dir, const char* config_json, const char* out_dir,
                        int no_realign);

/* Evaluates a marteloscope against ground truth; returns the report as JSON
 * and as an aligned text table. */
FI_API fi_status fi_evaluate(const char* marteloscope_path, const char* truth_path,
                             char** report_json_out, char** report_table_out);

/* Runs classical Hough / RANSAC / RANSAC* / RHT over a contaminated slice
 * suite (suite spec JSON may be NULL for defaults). */
FI_API fi_status fi_bench_fitters(const char* suite_json, const char* config_json,
                                  char** report_json_out, char** report_table_out);

/* Paired baseline and no-realign runs on the same scene; returns the two
 * evaluation reports as one comparison JSON. */
FI_API fi_status fi_ablate_no_realign(const char* scene_dir, const char* config_json,
                                      char** comparison_json_out);

/* Re-reconstructs matched trees from cluster subsets bucketed by 20-degree
 * coverage increments; returns the per-bucket medians as JSON. */
FI_API fi_status fi_ablate_coverage_sweep(const char* scene_dir, const char* config_json,
                                          char** buckets_json_out);

/* ---- streaming engine ----------------------------------------------------- */

typedef struct fi_engine fi_engine;

FI_API fi_status fi_engine_create(const char* config_json, fi_engine** engine_out);
FI_API void fi_engine_destroy(fi_engine* engine);

/* Pushes one scan: pose as unit quaternion (x, y, z, w) plus translation,
 * points as an interleaved float triple array in the sensor frame.
 * Timestamps must be strictly increasing. */
FI_API fi_status fi_engine_push_scan(fi_engine* engine, double timestamp,
                                     const double pose_qxyzw[4], const double pose_txyz[3],
                                     const float* xyz, size_t point_count);

/* Applies a loop-closure correction batch: `poses` holds 7 doubles per
 * corrected timestamp (qx qy qz qw tx ty tz), matching `timestamps`. */
FI_API fi_status fi_engine_apply_loop_closure(fi_engine* engine, double t_start, double t_end,
                                              const double* timestamps, const double* poses,
                                              size_t count);

/* Flushes buffered data, applies the final realignment and reconstruction
 * pass. Call once after the last scan. */
FI_API fi_status fi_engine_finalize(fi_engine* engine);

FI_API fi_status fi_engine_tree_count(fi_engine* engine, size_t* count_out);
FI_API fi_status fi_engine_payload_count(fi_engine* engine, size_t* count_out);
FI_API fi_status fi_engine_marteloscope(fi_engine* engine, char** json_out);

#ifdef __cplusplus
}
#endif

#endif /* FOREST_INVENTORY_H */
