#include "planehec/planehec.h"

#include <cstring>
#include <exception>
#include <filesystem>
#include <memory>
#include <optional>
#include <new>
#include <string>

#include "planehec/calibration.hpp"
#include "planehec/dataset_io.hpp"
#include "planehec/error.hpp"
#include "planehec/evaluation.hpp"
#include "planehec/ply.hpp"
#include "planehec/simulator.hpp"

struct phc_cloud {
  planehec::PointCloud cloud;
};

struct phc_dataset {
  planehec::Observations observations;
  std::string digest;
};

struct phc_report {
  planehec::CalibrationReportFile file;
  std::string json;
};

struct phc_table {
  std::string csv;
  std::string json;
};

namespace {

thread_local std::string g_last_error;

phc_status status_for(planehec::ErrorCode code) {
  using planehec::ErrorCode;
  switch (code) {
    case ErrorCode::kInvalidArgument:
    case ErrorCode::kInvalidPlane:
      return PHC_ERR_INVALID_ARGUMENT;
    case ErrorCode::kDegenerateInput:
    case ErrorCode::kDegenerateSample:
      return PHC_ERR_DEGENERATE_INPUT;
    case ErrorCode::kDetectionFailure:
      return PHC_ERR_DETECTION_FAILED;
    case ErrorCode::kInsufficientData:
      return PHC_ERR_INSUFFICIENT_DATA;
    case ErrorCode::kDegenerateMotion:
      return PHC_ERR_DEGENERATE_MOTION;
    case ErrorCode::kDegenerateNormals:
      return PHC_ERR_DEGENERATE_NORMALS;
    case ErrorCode::kOrientationInconsistency:
      return PHC_ERR_ORIENTATION;
    case ErrorCode::kOptimizationFailure:
      return PHC_ERR_OPTIMIZATION;
    case ErrorCode::kSceneConstruction:
      return PHC_ERR_SCENE;
    case ErrorCode::kParse:
      return PHC_ERR_PARSE;
    case ErrorCode::kIo:
      return PHC_ERR_IO;
  }
  return PHC_ERR_INTERNAL;
}

phc_status fail(phc_status status, std::string message) {
  g_last_error = std::move(message);
  return status;
}

template <typename F>
phc_status guarded(F&& f) {
  try {
    f();
    return PHC_OK;
  } catch (const planehec::Error& e) {
    return fail(status_for(e.code()), std::string(planehec::to_string(e.code())) + ": " + e.what());
  } catch (const std::bad_alloc&) {
    return fail(PHC_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(PHC_ERR_INTERNAL, e.what());
  }
}

#define PHC_REQUIRE(cond, what) \
  if (!(cond)) return fail(PHC_ERR_INVALID_ARGUMENT, what)

planehec::DetectionOptions to_detection(const phc_detect_options* o) {
  planehec::DetectionOptions d;
  if (o == nullptr) return d;
  d.ransac.distance_threshold = o->distance_threshold;
  d.ransac.max_iterations = o->max_iterations;
  d.ransac.min_inlier_ratio = o->min_inlier_ratio;
  d.ransac.seed = o->seed;
  d.near = o->near_depth;
  d.far = o->far_depth;
  return d;
}

planehec::CalibrationOptions to_calibration(const phc_calibrate_options* o) {
  planehec::CalibrationOptions c;
  if (o == nullptr) return c;
  c.run_refinement = o->run_refinement != 0;
  c.refine.max_iterations = o->max_iterations;
  c.refine.step_tolerance = o->step_tolerance;
  c.closed_form.max_rotation_gap = o->max_rotation_gap;
  c.closed_form.max_translation_condition = o->max_translation_condition;
  return c;
}

Eigen::Matrix4d matrix_from(const double m[16]) {
  Eigen::Matrix4d out;
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c) out(r, c) = m[4 * r + c];
  return out;
}

void matrix_to(const planehec::RigidTransform& t, double m[16]) {
  const Eigen::Matrix4d mat = t.matrix();
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c) m[4 * r + c] = mat(r, c);
}

void plane_to(const planehec::Plane& p, double out[4]) {
  out[0] = p.normal.x();
  out[1] = p.normal.y();
  out[2] = p.normal.z();
  out[3] = p.offset;
}

}  // namespace

extern "C" {

const char* phc_version(void) { return planehec::tool_version(); }

const char* phc_last_error(void) { return g_last_error.c_str(); }

const char* phc_status_name(phc_status status) {
  switch (status) {
    case PHC_OK: return "ok";
    case PHC_ERR_INVALID_ARGUMENT: return "invalid-argument";
    case PHC_ERR_IO: return "io";
    case PHC_ERR_PARSE: return "parse";
    case PHC_ERR_INSUFFICIENT_DATA: return "insufficient-data";
    case PHC_ERR_DEGENERATE_MOTION: return "degenerate-motion";
    case PHC_ERR_DEGENERATE_NORMALS: return "degenerate-normals";
    case PHC_ERR_ORIENTATION: return "orientation-inconsistency";
    case PHC_ERR_DETECTION_FAILED: return "detection-failure";
    case PHC_ERR_OPTIMIZATION: return "optimization-failure";
    case PHC_ERR_SCENE: return "scene-construction";
    case PHC_ERR_DEGENERATE_INPUT: return "degenerate-input";
    case PHC_ERR_INTERNAL: return "internal";
  }
  return "unknown";
}

phc_status phc_cloud_load(const char* path, phc_cloud** out) {
  PHC_REQUIRE(path && out, "phc_cloud_load: null argument");
  return guarded([&] { *out = new phc_cloud{planehec::parse_ply(path)}; });
}

phc_status phc_cloud_create(const double* xyz, size_t count, phc_cloud** out) {
  PHC_REQUIRE(out && (xyz || count == 0), "phc_cloud_create: null argument");
  return guarded([&] {
    auto* c = new phc_cloud;
    c->cloud.points.reserve(count);
    for (size_t i = 0; i < count; ++i) c->cloud.points.emplace_back(xyz[3 * i], xyz[3 * i + 1], xyz[3 * i + 2]);
    *out = c;
  });
}

size_t phc_cloud_size(const phc_cloud* cloud) { return cloud ? cloud->cloud.size() : 0; }

phc_status phc_cloud_points(const phc_cloud* cloud, double* xyz, size_t capacity) {
  PHC_REQUIRE(cloud && xyz, "phc_cloud_points: null argument");
  PHC_REQUIRE(capacity >= cloud->cloud.size(), "phc_cloud_points: capacity below cloud size");
  for (size_t i = 0; i < cloud->cloud.size(); ++i) {
    std::memcpy(xyz + 3 * i, cloud->cloud.points[i].data(), 3 * sizeof(double));
  }
  return PHC_OK;
}

phc_status phc_cloud_save(const phc_cloud* cloud, const char* path, int ascii) {
  PHC_REQUIRE(cloud && path, "phc_cloud_save: null argument");
  return guarded([&] {
    planehec::write_ply(path, cloud->cloud,
                        ascii ? planehec::PlyFormat::kAscii : planehec::PlyFormat::kBinaryLittleEndian);
  });
}

void phc_cloud_free(phc_cloud* cloud) { delete cloud; }

void phc_detect_options_default(phc_detect_options* options) {
  if (options == nullptr) return;
  const planehec::DetectionOptions d;
  options->distance_threshold = d.ransac.distance_threshold;
  options->max_iterations = d.ransac.max_iterations;
  options->min_inlier_ratio = d.ransac.min_inlier_ratio;
  options->seed = d.ransac.seed;
  options->near_depth = d.near;
  options->far_depth = d.far;
}

phc_status phc_detect_plane(const phc_cloud* cloud, const phc_detect_options* options,
                            double plane[4], size_t* inlier_count) {
  PHC_REQUIRE(cloud && plane, "phc_detect_plane: null argument");
  return guarded([&] {
    const planehec::PlaneFit fit = planehec::detect_plane(cloud->cloud, to_detection(options));
    plane_to(fit.plane, plane);
    if (inlier_count) *inlier_count = fit.inliers.size();
  });
}

phc_status phc_simulate(const char* config_json, const char* out_dir, int flags) {
  PHC_REQUIRE(config_json && out_dir, "phc_simulate: null argument");
  return guarded([&] {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(config_json);
    } catch (const nlohmann::json::parse_error& e) {
      throw planehec::Error(planehec::ErrorCode::kParse, std::string("scene config: ") + e.what());
    }
    const planehec::SceneConfig cfg = planehec::scene_config_from_json(j);
    planehec::SimulationWriteOptions w;
    w.cloud_format = (flags & PHC_SIM_ASCII_CLOUDS) ? planehec::PlyFormat::kAscii
                                                    : planehec::PlyFormat::kBinaryLittleEndian;
    w.inline_planes = (flags & PHC_SIM_INLINE_PLANES) != 0;
    w.pose_convention = (flags & PHC_SIM_TCP_IN_BASE) ? planehec::PoseConvention::kTcpInBase
                                                      : planehec::PoseConvention::kBaseToTcp;
    planehec::write_simulated_dataset(planehec::generate_scene(cfg), out_dir, w);
  });
}

phc_status phc_dataset_create(phc_dataset** out) {
  PHC_REQUIRE(out, "phc_dataset_create: null argument");
  return guarded([&] { *out = new phc_dataset; });
}

phc_status phc_dataset_load(const char* manifest_path, const phc_detect_options* options,
                            phc_pose_convention convention, phc_dataset** out) {
  PHC_REQUIRE(manifest_path && out, "phc_dataset_load: null argument");
  PHC_REQUIRE(convention >= PHC_POSE_FROM_MANIFEST && convention <= PHC_POSE_TCP_IN_BASE,
              "phc_dataset_load: unknown pose convention");
  return guarded([&] {
    const std::filesystem::path path(manifest_path);
    const planehec::DatasetManifest manifest = planehec::read_manifest(path);
    std::optional<planehec::PoseConvention> override_convention;
    if (convention == PHC_POSE_BASE_TO_TCP) override_convention = planehec::PoseConvention::kBaseToTcp;
    if (convention == PHC_POSE_TCP_IN_BASE) override_convention = planehec::PoseConvention::kTcpInBase;
    auto* ds = new phc_dataset;
    try {
      ds->observations = planehec::load_observations(manifest, path.parent_path(),
                                                     to_detection(options), override_convention);
      ds->digest = planehec::input_digest(path);
    } catch (...) {
      delete ds;
      throw;
    }
    *out = ds;
  });
}

phc_status phc_dataset_add_view(phc_dataset* dataset, const double pose[16], const double plane[4]) {
  PHC_REQUIRE(dataset && pose && plane, "phc_dataset_add_view: null argument");
  return guarded([&] {
    const planehec::RigidTransform a = planehec::ingest_pose(matrix_from(pose));
    const planehec::Plane p = planehec::canonicalize(
        planehec::Plane{Eigen::Vector3d(plane[0], plane[1], plane[2]), plane[3]});
    dataset->observations.push_back({p, a});
  });
}

size_t phc_dataset_size(const phc_dataset* dataset) {
  return dataset ? dataset->observations.size() : 0;
}

phc_status phc_dataset_view(const phc_dataset* dataset, size_t index, double pose[16],
                            double plane[4]) {
  PHC_REQUIRE(dataset && pose && plane, "phc_dataset_view: null argument");
  PHC_REQUIRE(index < dataset->observations.size(), "phc_dataset_view: index out of range");
  matrix_to(dataset->observations[index].tcp_pose, pose);
  plane_to(dataset->observations[index].plane, plane);
  return PHC_OK;
}

void phc_dataset_free(phc_dataset* dataset) { delete dataset; }

void phc_calibrate_options_default(phc_calibrate_options* options) {
  if (options == nullptr) return;
  const planehec::CalibrationOptions c;
  options->run_refinement = c.run_refinement ? 1 : 0;
  options->max_iterations = c.refine.max_iterations;
  options->step_tolerance = c.refine.step_tolerance;
  options->max_rotation_gap = c.closed_form.max_rotation_gap;
  options->max_translation_condition = c.closed_form.max_translation_condition;
}

phc_status phc_calibrate(const phc_dataset* dataset, const phc_calibrate_options* options,
                         phc_report** out) {
  PHC_REQUIRE(dataset && out, "phc_calibrate: null argument");
  return guarded([&] {
    const planehec::CalibrationResult result =
        planehec::calibrate(dataset->observations, to_calibration(options));
    auto* r = new phc_report;
    r->file = planehec::CalibrationReportFile::from_result(result, dataset->observations.size(),
                                                           dataset->digest);
    r->json = planehec::to_json(r->file).dump(2) + "\n";
    *out = r;
  });
}

phc_status phc_report_transform(const phc_report* report, double X[16]) {
  PHC_REQUIRE(report && X, "phc_report_transform: null argument");
  matrix_to(report->file.X, X);
  return PHC_OK;
}

phc_status phc_report_closed_form_transform(const phc_report* report, double X[16]) {
  PHC_REQUIRE(report && X, "phc_report_closed_form_transform: null argument");
  matrix_to(report->file.closed_form_X, X);
  return PHC_OK;
}

phc_status phc_report_plane_base(const phc_report* report, double plane[4]) {
  PHC_REQUIRE(report && plane, "phc_report_plane_base: null argument");
  for (int i = 0; i < 4; ++i) plane[i] = report->file.y_mean(i);
  return PHC_OK;
}

phc_status phc_report_diagnostics(const phc_report* report, double* rotation_gap,
                                  double* translation_condition, double* residual_rms) {
  PHC_REQUIRE(report, "phc_report_diagnostics: null report");
  const auto& d = report->file.diagnostics;
  if (rotation_gap) *rotation_gap = d.rotation_gap;
  if (translation_condition) *translation_condition = d.translation_condition;
  if (residual_rms) *residual_rms = d.residual_rms;
  return PHC_OK;
}

phc_status phc_report_refinement(const phc_report* report, int* iterations, int* converged,
                                 double* final_objective) {
  PHC_REQUIRE(report, "phc_report_refinement: null report");
  const auto& r = report->file.refine;
  if (iterations) *iterations = r ? r->iterations : -1;
  if (converged) *converged = r && r->converged ? 1 : 0;
  if (final_objective) *final_objective = r ? r->final_objective : 0.0;
  return PHC_OK;
}

const char* phc_report_json(const phc_report* report) { return report ? report->json.c_str() : ""; }

phc_status phc_report_save(const phc_report* report, const char* path) {
  PHC_REQUIRE(report && path, "phc_report_save: null argument");
  return guarded([&] { planehec::write_text_file(path, report->json); });
}

void phc_report_free(phc_report* report) { delete report; }

void phc_eval_options_default(phc_eval_options* options) {
  if (options == nullptr) return;
  *options = phc_eval_options{};
  options->trials = 50;
  options->batch_size = 15;
  options->repetitions = 20;
}

phc_status phc_evaluate(const phc_dataset* dataset, const char* protocol,
                        const phc_eval_options* options, phc_table** out) {
  PHC_REQUIRE(dataset && protocol && options && out, "phc_evaluate: null argument");
  PHC_REQUIRE(options->trials > 0, "phc_evaluate: trials must be positive");
  PHC_REQUIRE(options->sample_sizes || options->sample_size_count == 0, "phc_evaluate: null sample sizes");
  PHC_REQUIRE(options->rotation_sigmas || options->rotation_sigma_count == 0, "phc_evaluate: null rotation sigmas");
  PHC_REQUIRE(options->translation_sigmas || options->translation_sigma_count == 0, "phc_evaluate: null translation sigmas");
  const std::string name(protocol);
  const std::vector<size_t> sizes(options->sample_sizes,
                                  options->sample_sizes + options->sample_size_count);
  return guarded([&] {
    auto table = std::make_unique<phc_table>();
    const auto& pool = dataset->observations;
    if (name == "table1") {
      const auto rows = planehec::table1_protocol(pool, sizes, options->trials, options->seed);
      table->csv = planehec::table1_csv(rows);
      table->json = planehec::table1_json(rows).dump(2);
    } else if (name == "reconstruct") {
      const auto rows = planehec::reconstruction_protocol(pool, sizes, options->trials, options->seed);
      table->csv = planehec::reconstruction_csv(rows);
      table->json = planehec::reconstruction_json(rows).dump(2);
    } else if (name == "noise-sweep") {
      const std::vector<double> rot(options->rotation_sigmas,
                                    options->rotation_sigmas + options->rotation_sigma_count);
      const std::vector<double> trans(options->translation_sigmas,
                                      options->translation_sigmas + options->translation_sigma_count);
      const auto cells = planehec::noise_sweep(pool, rot, trans, options->trials, options->seed,
                                               options->batch_size);
      table->csv = planehec::noise_sweep_csv(cells);
      table->json = planehec::noise_sweep_json(cells).dump(2);
    } else if (name == "runtime") {
      const auto report = planehec::runtime_report(pool, options->repetitions);
      table->csv = planehec::runtime_csv(report, pool.size());
      table->json = planehec::runtime_json(report, pool.size()).dump(2);
    } else {
      throw planehec::Error(planehec::ErrorCode::kInvalidArgument,
                            "unknown protocol '" + name + "'");
    }
    *out = table.release();
  });
}

const char* phc_table_csv(const phc_table* table) { return table ? table->csv.c_str() : ""; }

const char* phc_table_json(const phc_table* table) { return table ? table->json.c_str() : ""; }

void phc_table_free(phc_table* table) { delete table; }

}  // extern "C"
