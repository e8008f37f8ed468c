/* C interface to the planehec calibration library.
 *
 * Every function returns a phc_status. On failure the message is available
 * from phc_last_error() on the same thread until the next failing call.
 * Handles are opaque and owned by the caller; release them with the matching
 * *_free function. Strings returned by handle accessors live as long as the
 * handle.
 *
 * Poses are 4x4 row-major arrays of 16 doubles. Planes are (nx, ny, nz, d)
 * with n.p + d = 0. Units are meters and radians.
 */
#ifndef PLANEHEC_PLANEHEC_H
#define PLANEHEC_PLANEHEC_H

#include <stddef.h>
#include <stdint.h>

#if defined(PLANEHEC_BUILDING_LIBRARY)
#define PHC_API __attribute__((visibility("default")))
#else
#define PHC_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum phc_status {
  PHC_OK = 0,
  PHC_ERR_INVALID_ARGUMENT = 1,
  PHC_ERR_IO = 2,
  PHC_ERR_PARSE = 3,
  PHC_ERR_INSUFFICIENT_DATA = 4,
  PHC_ERR_DEGENERATE_MOTION = 5,
  PHC_ERR_DEGENERATE_NORMALS = 6,
  PHC_ERR_ORIENTATION = 7,
  PHC_ERR_DETECTION_FAILED = 8,
  PHC_ERR_OPTIMIZATION = 9,
  PHC_ERR_SCENE = 10,
  PHC_ERR_DEGENERATE_INPUT = 11,
  PHC_ERR_INTERNAL = 12
} phc_status;

typedef enum phc_pose_convention {
  PHC_POSE_FROM_MANIFEST = -1,
  PHC_POSE_BASE_TO_TCP = 0,
  PHC_POSE_TCP_IN_BASE = 1
} phc_pose_convention;

typedef struct phc_cloud phc_cloud;
typedef struct phc_dataset phc_dataset;
typedef struct phc_report phc_report;
typedef struct phc_table phc_table;

PHC_API const char* phc_version(void);
PHC_API const char* phc_last_error(void);
PHC_API const char* phc_status_name(phc_status status);

/* Point clouds */
PHC_API phc_status phc_cloud_load(const char* path, phc_cloud** out);
/* xyz holds count consecutive (x, y, z) triples. */
PHC_API phc_status phc_cloud_create(const double* xyz, size_t count, phc_cloud** out);
PHC_API size_t phc_cloud_size(const phc_cloud* cloud);
PHC_API phc_status phc_cloud_points(const phc_cloud* cloud, double* xyz, size_t capacity);
PHC_API phc_status phc_cloud_save(const phc_cloud* cloud, const char* path, int ascii);
PHC_API void phc_cloud_free(phc_cloud* cloud);

typedef struct phc_detect_options {
  double distance_threshold;
  int max_iterations;
  double min_inlier_ratio;
  uint64_t seed;
  double near_depth;
  double far_depth;
} phc_detect_options;

PHC_API void phc_detect_options_default(phc_detect_options* options);
/* inlier_count may be NULL. */
PHC_API phc_status phc_detect_plane(const phc_cloud* cloud, const phc_detect_options* options,
                                    double plane[4], size_t* inlier_count);

/* Simulation */
enum {
  PHC_SIM_ASCII_CLOUDS = 1,
  PHC_SIM_INLINE_PLANES = 2,
  PHC_SIM_TCP_IN_BASE = 4
};
/* Writes manifest.json, the view clouds and truth.json into out_dir. */
PHC_API phc_status phc_simulate(const char* config_json, const char* out_dir, int flags);

/* Datasets */
PHC_API phc_status phc_dataset_create(phc_dataset** out);
/* Runs plane detection on cloud views. options may be NULL for defaults. */
PHC_API phc_status phc_dataset_load(const char* manifest_path, const phc_detect_options* options,
                                    phc_pose_convention convention, phc_dataset** out);
/* pose maps base-frame points to TCP-frame points; plane is camera-frame. */
PHC_API phc_status phc_dataset_add_view(phc_dataset* dataset, const double pose[16],
                                        const double plane[4]);
PHC_API size_t phc_dataset_size(const phc_dataset* dataset);
PHC_API phc_status phc_dataset_view(const phc_dataset* dataset, size_t index, double pose[16],
                                    double plane[4]);
PHC_API void phc_dataset_free(phc_dataset* dataset);

/* Calibration */
typedef struct phc_calibrate_options {
  int run_refinement;
  int max_iterations;
  double step_tolerance;
  double max_rotation_gap;
  double max_translation_condition;
} phc_calibrate_options;

PHC_API void phc_calibrate_options_default(phc_calibrate_options* options);
/* options may be NULL for defaults. */
PHC_API phc_status phc_calibrate(const phc_dataset* dataset, const phc_calibrate_options* options,
                                 phc_report** out);
PHC_API phc_status phc_report_transform(const phc_report* report, double X[16]);
PHC_API phc_status phc_report_closed_form_transform(const phc_report* report, double X[16]);
PHC_API phc_status phc_report_plane_base(const phc_report* report, double plane[4]);
PHC_API phc_status phc_report_diagnostics(const phc_report* report, double* rotation_gap,
                                          double* translation_condition, double* residual_rms);
/* iterations is -1 when refinement did not run. */
PHC_API phc_status phc_report_refinement(const phc_report* report, int* iterations,
                                         int* converged, double* final_objective);
PHC_API const char* phc_report_json(const phc_report* report);
PHC_API phc_status phc_report_save(const phc_report* report, const char* path);
PHC_API void phc_report_free(phc_report* report);

/* Evaluation protocols: "table1", "reconstruct", "noise-sweep", "runtime". */
typedef struct phc_eval_options {
  size_t trials;
  uint64_t seed;
  const size_t* sample_sizes; /* table1, reconstruct */
  size_t sample_size_count;
  const double* rotation_sigmas; /* noise-sweep, radians */
  size_t rotation_sigma_count;
  const double* translation_sigmas; /* noise-sweep, meters */
  size_t translation_sigma_count;
  size_t batch_size;  /* noise-sweep views per calibration */
  size_t repetitions; /* runtime */
} phc_eval_options;

PHC_API void phc_eval_options_default(phc_eval_options* options);
PHC_API phc_status phc_evaluate(const phc_dataset* dataset, const char* protocol,
                                const phc_eval_options* options, phc_table** out);
PHC_API const char* phc_table_csv(const phc_table* table);
PHC_API const char* phc_table_json(const phc_table* table);
PHC_API void phc_table_free(phc_table* table);

#ifdef __cplusplus
}
#endif

#endif /* PLANEHEC_PLANEHEC_H */
