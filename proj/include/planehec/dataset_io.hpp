#pragma once

#include <filesystem>
#include <json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "planehec/calibration.hpp"
#include "planehec/evaluation.hpp"
#include "planehec/plane_detection.hpp"
#include "planehec/ply.hpp"
#include "planehec/simulator.hpp"

namespace planehec {

inline constexpr int kManifestVersion = 1;
inline constexpr int kReportVersion = 1;
const char* tool_version();

enum class PoseConvention {
  kBaseToTcp,  // pose maps base-frame points to TCP-frame points (A_i)
  kTcpInBase,  // pose is the TCP in the base frame (A_i^-1), as most robots log it
};

PoseConvention parse_pose_convention(const std::string& name);
const char* to_string(PoseConvention convention);

struct ManifestView {
  Eigen::Matrix4d pose = Eigen::Matrix4d::Identity();  // as stored in the file
  std::optional<std::string> cloud_path;               // relative to the manifest
  std::optional<Plane> plane;                          // inline camera-frame plane
};

struct DatasetManifest {
  int version = kManifestVersion;
  PoseConvention pose_convention = PoseConvention::kBaseToTcp;
  std::vector<ManifestView> views;
};

nlohmann::json to_json(const DatasetManifest& manifest);
DatasetManifest manifest_from_json(const nlohmann::json& j);
DatasetManifest read_manifest(const std::filesystem::path& path);
void write_manifest(const std::filesystem::path& path, const DatasetManifest& manifest);

/// Validates a logged pose (orthogonality to 1e-6, det > 0, bottom row
/// 0 0 0 1) and re-orthonormalizes its rotation. Throws Error(kParse).
RigidTransform ingest_pose(const Eigen::Matrix4d& pose);

/// Observations for every view: inline planes are canonicalized, clouds are
/// read and passed through detect_plane (view i seeded with
/// derive_seed(options.ransac.seed, i)). Poses are converted to base -> TCP.
Observations load_observations(const DatasetManifest& manifest,
                               const std::filesystem::path& manifest_dir,
                               const DetectionOptions& options,
                               std::optional<PoseConvention> convention_override = std::nullopt);

/// SHA-256 over the manifest bytes followed by every referenced cloud file.
std::string input_digest(const std::filesystem::path& manifest_path);

struct CalibrationReportFile {
  int version = kReportVersion;
  std::string tool_version;
  std::string input_digest;
  RigidTransform X;
  RigidTransform closed_form_X;
  Eigen::RowVector4d y_mean = Eigen::RowVector4d::Zero();
  SolveDiagnostics diagnostics;
  std::optional<RefineReport> refine;
  std::size_t views = 0;

  static CalibrationReportFile from_result(const CalibrationResult& result, std::size_t views,
                                           std::string digest);
};

nlohmann::json to_json(const CalibrationReportFile& report);
CalibrationReportFile report_from_json(const nlohmann::json& j);

SceneConfig scene_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const SceneConfig& cfg);

struct SimulationWriteOptions {
  PoseConvention pose_convention = PoseConvention::kBaseToTcp;
  PlyFormat cloud_format = PlyFormat::kBinaryLittleEndian;
  bool inline_planes = false;  // write perturbed truth planes instead of clouds
};

/// manifest.json, view_NNNN.ply per view (unless inline_planes) and truth.json.
void write_simulated_dataset(const SyntheticDataset& data, const std::filesystem::path& dir,
                             const SimulationWriteOptions& options);

nlohmann::json plane_to_json(const Plane& plane);
Plane plane_from_json(const nlohmann::json& j);
nlohmann::json transform_to_json(const RigidTransform& t);  // 16 numbers, row-major
RigidTransform transform_from_json(const nlohmann::json& j);

// Evaluation tables: one CSV row per cell, plus a JSON summary.
std::string table1_csv(const std::vector<Table1Row>& rows);
nlohmann::json table1_json(const std::vector<Table1Row>& rows);
std::string reconstruction_csv(const std::vector<ReconstructionRow>& rows);
nlohmann::json reconstruction_json(const std::vector<ReconstructionRow>& rows);
std::string noise_sweep_csv(const std::vector<NoiseCell>& cells);
nlohmann::json noise_sweep_json(const std::vector<NoiseCell>& cells);
std::string runtime_csv(const RuntimeReport& report, std::size_t views);
nlohmann::json runtime_json(const RuntimeReport& report, std::size_t views);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace planehec
