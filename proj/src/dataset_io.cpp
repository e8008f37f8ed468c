#include "planehec/dataset_io.hpp"

#include <openssl/evp.h>

#include <fstream>
#include <iomanip>
#include <memory>
#include <numbers>
#include <sstream>

#include "planehec/error.hpp"
#include "planehec/log.hpp"
#include "planehec/ply.hpp"

namespace planehec {

using nlohmann::json;

namespace {

constexpr double kRadToDeg = 180.0 / std::numbers::pi;

Error schema_error(const std::string& what) { return Error(ErrorCode::kParse, what); }

json parse_json_text(const std::string& text, const std::string& origin) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kParse, origin + ": invalid JSON: " + e.what());
  }
}

Eigen::Vector3d vec3_from_json(const json& j, const char* what) {
  if (!j.is_array() || j.size() != 3) throw schema_error(std::string(what) + " must be a 3-array");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

json vec_to_json(const Eigen::VectorXd& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

Eigen::Matrix4d matrix_from_json(const json& j) {
  if (!j.is_array() || j.size() != 16) throw schema_error("pose must be 16 numbers (row-major 4x4)");
  Eigen::Matrix4d m;
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c) m(r, c) = j[static_cast<std::size_t>(4 * r + c)].get<double>();
  return m;
}

json matrix_to_json(const Eigen::Matrix4d& m) {
  json a = json::array();
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c) a.push_back(m(r, c));
  return a;
}

json stats_json(const TrialStats& s) {
  return {{"e_r_deg", s.e_r},       {"e_t_mm", s.e_t},
          {"e_xy_mm", s.e_xy},      {"e_z_mm", s.e_z},
          {"trials", s.trials},     {"excluded", s.excluded},
          {"sample_size", s.sample_size}, {"mean_iterations", s.mean_iterations},
          {"iteration_std", s.iteration_std}};
}

void stats_csv(std::ostream& out, const TrialStats& s) {
  out << s.e_r << ',' << s.e_t << ',' << s.e_xy << ',' << s.e_z << ',' << s.trials << ','
      << s.excluded;
}

std::ostringstream csv_stream() {
  std::ostringstream out;
  out << std::setprecision(10);
  return out;
}

template <typename F>
auto with_schema(const std::string& origin, F&& f) {
  try {
    return f();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParse, origin + ": " + e.what());
  }
}

}  // namespace

const char* tool_version() { return "planehec 0.1.0"; }

PoseConvention parse_pose_convention(const std::string& name) {
  if (name == "base_to_tcp") return PoseConvention::kBaseToTcp;
  if (name == "tcp_in_base") return PoseConvention::kTcpInBase;
  throw Error(ErrorCode::kParse,
              "unknown pose convention '" + name + "' (expected base_to_tcp or tcp_in_base)");
}

const char* to_string(PoseConvention convention) {
  return convention == PoseConvention::kBaseToTcp ? "base_to_tcp" : "tcp_in_base";
}

json plane_to_json(const Plane& plane) {
  return {{"normal", vec_to_json(plane.normal)}, {"d", plane.offset}};
}

Plane plane_from_json(const json& j) {
  return with_schema("plane", [&] {
    return Plane{vec3_from_json(j.at("normal"), "plane normal"), j.at("d").get<double>()};
  });
}

json transform_to_json(const RigidTransform& t) { return matrix_to_json(t.matrix()); }

RigidTransform transform_from_json(const json& j) {
  return with_schema("transform", [&] { return RigidTransform::from_matrix(matrix_from_json(j)); });
}

json to_json(const DatasetManifest& manifest) {
  json views = json::array();
  for (const auto& v : manifest.views) {
    json jv = {{"pose", matrix_to_json(v.pose)}};
    if (v.cloud_path) jv["cloud_path"] = *v.cloud_path;
    if (v.plane) jv["plane"] = plane_to_json(*v.plane);
    views.push_back(std::move(jv));
  }
  return {{"version", manifest.version},
          {"pose_convention", to_string(manifest.pose_convention)},
          {"views", std::move(views)}};
}

DatasetManifest manifest_from_json(const json& j) {
  return with_schema("manifest", [&] {
    DatasetManifest m;
    m.version = j.at("version").get<int>();
    if (m.version != kManifestVersion) {
      throw schema_error("unsupported manifest version " + std::to_string(m.version));
    }
    m.pose_convention = parse_pose_convention(j.at("pose_convention").get<std::string>());
    std::size_t index = 0;
    for (const auto& jv : j.at("views")) {
      ManifestView v;
      v.pose = matrix_from_json(jv.at("pose"));
      if (jv.contains("cloud_path")) v.cloud_path = jv["cloud_path"].get<std::string>();
      if (jv.contains("plane")) v.plane = plane_from_json(jv["plane"]);
      if (v.cloud_path.has_value() == v.plane.has_value()) {
        throw schema_error("view " + std::to_string(index) +
                           " must have exactly one of cloud_path or plane");
      }
      m.views.push_back(std::move(v));
      ++index;
    }
    return m;
  });
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out << text;
  if (!out) throw Error(ErrorCode::kIo, "failed writing " + path.string());
}

DatasetManifest read_manifest(const std::filesystem::path& path) {
  return manifest_from_json(parse_json_text(read_text_file(path), path.string()));
}

void write_manifest(const std::filesystem::path& path, const DatasetManifest& manifest) {
  write_text_file(path, to_json(manifest).dump(2) + "\n");
}

RigidTransform ingest_pose(const Eigen::Matrix4d& pose) {
  if (!pose.allFinite()) throw Error(ErrorCode::kParse, "pose contains non-finite values");
  if ((pose.row(3) - Eigen::RowVector4d(0, 0, 0, 1)).norm() > 1e-9) {
    throw Error(ErrorCode::kParse, "pose bottom row must be 0 0 0 1");
  }
  const Eigen::Matrix3d r = pose.topLeftCorner<3, 3>();
  if ((r.transpose() * r - Eigen::Matrix3d::Identity()).norm() > 1e-6 || r.determinant() <= 0.0) {
    throw Error(ErrorCode::kParse, "pose rotation is not orthonormal within 1e-6");
  }
  RigidTransform t = RigidTransform::from_matrix(pose);
  t.rotation = project_to_so3(r);
  return t;
}

Observations load_observations(const DatasetManifest& manifest,
                               const std::filesystem::path& manifest_dir,
                               const DetectionOptions& options,
                               std::optional<PoseConvention> convention_override) {
  const PoseConvention convention = convention_override.value_or(manifest.pose_convention);
  Observations obs;
  obs.reserve(manifest.views.size());
  for (std::size_t i = 0; i < manifest.views.size(); ++i) {
    const ManifestView& v = manifest.views[i];
    RigidTransform pose;
    try {
      pose = ingest_pose(v.pose);
    } catch (const Error& e) {
      throw Error(e.code(), "view " + std::to_string(i) + ": " + e.what());
    }
    if (convention == PoseConvention::kTcpInBase) pose = pose.inverse();

    Plane plane;
    if (v.plane) {
      plane = canonicalize(*v.plane);
    } else {
      const PointCloud cloud = parse_ply(manifest_dir / *v.cloud_path);
      DetectionOptions view_options = options;
      view_options.ransac.seed = derive_seed(options.ransac.seed, i);
      try {
        plane = detect_plane(cloud, view_options).plane;
      } catch (const Error& e) {
        throw Error(e.code(), "view " + std::to_string(i) + " (" + *v.cloud_path + "): " + e.what());
      }
    }
    obs.push_back({plane, pose});
  }
  return obs;
}

std::string input_digest(const std::filesystem::path& manifest_path) {
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) {
    throw Error(ErrorCode::kIo, "cannot initialise SHA-256");
  }
  auto feed = [&](const std::string& bytes) {
    EVP_DigestUpdate(ctx.get(), bytes.data(), bytes.size());
  };
  const std::string manifest_text = read_text_file(manifest_path);
  feed(manifest_text);
  const DatasetManifest manifest =
      manifest_from_json(parse_json_text(manifest_text, manifest_path.string()));
  for (const auto& v : manifest.views) {
    if (v.cloud_path) feed(read_text_file(manifest_path.parent_path() / *v.cloud_path));
  }
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx.get(), md, &len);
  std::ostringstream hex;
  hex << "sha256:" << std::hex << std::setfill('0');
  for (unsigned int i = 0; i < len; ++i) hex << std::setw(2) << static_cast<int>(md[i]);
  return hex.str();
}

CalibrationReportFile CalibrationReportFile::from_result(const CalibrationResult& result,
                                                         std::size_t views, std::string digest) {
  CalibrationReportFile r;
  r.tool_version = planehec::tool_version();
  r.input_digest = std::move(digest);
  r.X = result.X;
  r.closed_form_X = result.closed_form_X;
  r.y_mean = result.plane_base;
  r.diagnostics = result.diagnostics;
  r.refine = result.refine;
  r.views = views;
  return r;
}

json to_json(const CalibrationReportFile& r) {
  json refine = nullptr;
  if (r.refine) {
    refine = {{"iterations", r.refine->iterations},
              {"initial_objective", r.refine->initial_objective},
              {"final_objective", r.refine->final_objective},
              {"step_norms", r.refine->step_norms},
              {"converged", r.refine->converged}};
  }
  const Eigen::Vector3d rotvec = log_so3(r.X.rotation);
  return {
      {"version", r.version},
      {"tool_version", r.tool_version},
      {"input_digest", r.input_digest},
      {"views", r.views},
      {"X", transform_to_json(r.X)},
      {"closed_form_X", transform_to_json(r.closed_form_X)},
      {"Y_mean", vec_to_json(r.y_mean.transpose())},
      {"diagnostics",
       {{"rotation_gap", r.diagnostics.rotation_gap},
        {"translation_condition", r.diagnostics.translation_condition},
        {"residual_rms", r.diagnostics.residual_rms}}},
      {"refine", refine},
      // Display units only; ignored when reading.
      {"summary",
       {{"translation_mm", vec_to_json(r.X.translation * 1e3)},
        {"rotation_angle_deg", rotvec.norm() * kRadToDeg},
        {"rotation_vector_deg", vec_to_json(rotvec * kRadToDeg)}}},
  };
}

CalibrationReportFile report_from_json(const json& j) {
  return with_schema("report", [&] {
    CalibrationReportFile r;
    r.version = j.at("version").get<int>();
    r.tool_version = j.at("tool_version").get<std::string>();
    r.input_digest = j.at("input_digest").get<std::string>();
    r.views = j.at("views").get<std::size_t>();
    r.X = transform_from_json(j.at("X"));
    r.closed_form_X = transform_from_json(j.at("closed_form_X"));
    const auto& y = j.at("Y_mean");
    if (!y.is_array() || y.size() != 4) throw schema_error("Y_mean must be a 4-array");
    for (int i = 0; i < 4; ++i) r.y_mean(i) = y[static_cast<std::size_t>(i)].get<double>();
    const auto& d = j.at("diagnostics");
    r.diagnostics.rotation_gap = d.at("rotation_gap").get<double>();
    r.diagnostics.translation_condition = d.at("translation_condition").get<double>();
    r.diagnostics.residual_rms = d.at("residual_rms").get<double>();
    if (!j.at("refine").is_null()) {
      const auto& f = j["refine"];
      RefineReport rep;
      rep.iterations = f.at("iterations").get<int>();
      rep.initial_objective = f.at("initial_objective").get<double>();
      rep.final_objective = f.at("final_objective").get<double>();
      rep.step_norms = f.at("step_norms").get<std::vector<double>>();
      rep.converged = f.at("converged").get<bool>();
      r.refine = rep;
    }
    return r;
  });
}

SceneConfig scene_config_from_json(const json& j) {
  return with_schema("scene config", [&] {
    SceneConfig cfg;
    if (j.contains("ground_truth_X") && !j["ground_truth_X"].is_string()) {
      cfg.ground_truth_X = ingest_pose(matrix_from_json(j["ground_truth_X"]));
    }
    if (j.contains("plane_base") && !j["plane_base"].is_string()) {
      cfg.plane_base = plane_from_json(j["plane_base"]);
    }
    cfg.num_views = j.value("num_views", cfg.num_views);
    if (j.contains("depth_range")) {
      const auto& r = j["depth_range"];
      if (!r.is_array() || r.size() != 2) throw schema_error("depth_range must be [near, far]");
      cfg.near = r[0].get<double>();
      cfg.far = r[1].get<double>();
    }
    cfg.rotation_diversity = j.value("rotation_diversity", cfg.rotation_diversity);
    cfg.points_per_view = j.value("points_per_view", cfg.points_per_view);
    if (j.contains("workspace_center")) {
      cfg.workspace_center = vec3_from_json(j["workspace_center"], "workspace_center");
    }
    if (j.contains("noise")) {
      const auto& n = j["noise"];
      if (n.is_string()) {
        const auto name = n.get<std::string>();
        if (name == "calibrated") {
          cfg.noise = NoiseSpec::calibrated();
        } else if (name == "none") {
          cfg.noise = NoiseSpec::none();
        } else {
          throw schema_error("unknown noise preset '" + name + "'");
        }
      } else {
        cfg.noise.depth_sigma = n.value("depth_sigma", cfg.noise.depth_sigma);
        cfg.noise.plane_rotation_sigma = n.value("plane_rotation_sigma", 0.0);
        cfg.noise.plane_translation_sigma = n.value("plane_translation_sigma", 0.0);
        cfg.noise.outlier_fraction = n.value("outlier_fraction", 0.0);
      }
    }
    cfg.seed = j.value("seed", cfg.seed);
    cfg.validate();
    return cfg;
  });
}

json to_json(const SceneConfig& cfg) {
  json j = {{"num_views", cfg.num_views},
            {"depth_range", {cfg.near, cfg.far}},
            {"rotation_diversity", cfg.rotation_diversity},
            {"points_per_view", cfg.points_per_view},
            {"workspace_center", vec_to_json(cfg.workspace_center)},
            {"noise",
             {{"depth_sigma", cfg.noise.depth_sigma},
              {"plane_rotation_sigma", cfg.noise.plane_rotation_sigma},
              {"plane_translation_sigma", cfg.noise.plane_translation_sigma},
              {"outlier_fraction", cfg.noise.outlier_fraction}}},
            {"seed", cfg.seed}};
  j["ground_truth_X"] = cfg.ground_truth_X ? transform_to_json(*cfg.ground_truth_X) : json("random");
  j["plane_base"] = cfg.plane_base ? plane_to_json(*cfg.plane_base) : json("random");
  return j;
}

void write_simulated_dataset(const SyntheticDataset& data, const std::filesystem::path& dir,
                             const SimulationWriteOptions& options) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::kIo, "cannot create " + dir.string() + ": " + ec.message());

  const bool plane_noise =
      data.noise.plane_rotation_sigma > 0.0 || data.noise.plane_translation_sigma > 0.0;
  if (plane_noise && !options.inline_planes) {
    log_warn("plane-level noise is only applied to inline planes; clouds carry depth noise only");
  }

  DatasetManifest manifest;
  manifest.pose_convention = options.pose_convention;
  for (std::size_t i = 0; i < data.views.size(); ++i) {
    const SyntheticView& view = data.views[i];
    ManifestView mv;
    const RigidTransform pose = options.pose_convention == PoseConvention::kTcpInBase
                                    ? view.tcp_pose.inverse()
                                    : view.tcp_pose;
    mv.pose = pose.matrix();
    if (options.inline_planes) {
      mv.plane = perturb_plane(view.truth_plane, data.noise, derive_seed(data.plane_noise_seed, i));
    } else {
      std::ostringstream name;
      name << "view_" << std::setw(4) << std::setfill('0') << i << ".ply";
      write_ply(dir / name.str(), view.cloud, options.cloud_format);
      mv.cloud_path = name.str();
    }
    manifest.views.push_back(std::move(mv));
  }
  write_manifest(dir / "manifest.json", manifest);

  const json truth = {{"X", transform_to_json(data.truth_X)},
                      {"plane_base", plane_to_json(data.truth_plane_base)},
                      {"noise",
                       {{"depth_sigma", data.noise.depth_sigma},
                        {"plane_rotation_sigma", data.noise.plane_rotation_sigma},
                        {"plane_translation_sigma", data.noise.plane_translation_sigma},
                        {"outlier_fraction", data.noise.outlier_fraction}}}};
  write_text_file(dir / "truth.json", truth.dump(2) + "\n");
}

std::string table1_csv(const std::vector<Table1Row>& rows) {
  auto out = csv_stream();
  out << "sample_size,solver,e_r_deg,e_t_mm,e_xy_mm,e_z_mm,trials,excluded\n";
  for (const auto& r : rows) {
    out << r.sample_size << ",closed_form,";
    stats_csv(out, r.closed_form);
    out << '\n' << r.sample_size << ",iterative,";
    stats_csv(out, r.iterative);
    out << '\n';
  }
  return out.str();
}

json table1_json(const std::vector<Table1Row>& rows) {
  json a = json::array();
  for (const auto& r : rows) {
    a.push_back({{"sample_size", r.sample_size},
                 {"closed_form", stats_json(r.closed_form)},
                 {"iterative", stats_json(r.iterative)}});
  }
  return {{"protocol", "table1"}, {"rows", a}};
}

std::string reconstruction_csv(const std::vector<ReconstructionRow>& rows) {
  auto out = csv_stream();
  out << "sample_size,rotation_error_deg,distance_error_mm,trials,excluded\n";
  for (const auto& r : rows) {
    out << r.sample_size << ',' << r.pooled.rotation_error << ',' << r.pooled.distance_error << ','
        << r.trials << ',' << r.excluded << '\n';
  }
  return out.str();
}

json reconstruction_json(const std::vector<ReconstructionRow>& rows) {
  json a = json::array();
  for (const auto& r : rows) {
    a.push_back({{"sample_size", r.sample_size},
                 {"rotation_error_deg", r.pooled.rotation_error},
                 {"distance_error_mm", r.pooled.distance_error},
                 {"trials", r.trials},
                 {"excluded", r.excluded}});
  }
  return {{"protocol", "reconstruct"}, {"rows", a}};
}

std::string noise_sweep_csv(const std::vector<NoiseCell>& cells) {
  auto out = csv_stream();
  out << "rotation_sigma_deg,translation_sigma_mm,solver,e_r_deg,e_t_mm,e_xy_mm,e_z_mm,trials,"
         "excluded\n";
  for (const auto& c : cells) {
    const double rot = c.rotation_sigma * kRadToDeg;
    const double trans = c.translation_sigma * 1e3;
    out << rot << ',' << trans << ",closed_form,";
    stats_csv(out, c.closed_form);
    out << '\n' << rot << ',' << trans << ",iterative,";
    stats_csv(out, c.iterative);
    out << '\n';
  }
  return out.str();
}

json noise_sweep_json(const std::vector<NoiseCell>& cells) {
  json a = json::array();
  for (const auto& c : cells) {
    a.push_back({{"rotation_sigma_deg", c.rotation_sigma * kRadToDeg},
                 {"translation_sigma_mm", c.translation_sigma * 1e3},
                 {"closed_form", stats_json(c.closed_form)},
                 {"iterative", stats_json(c.iterative)}});
  }
  return {{"protocol", "noise-sweep"}, {"cells", a}};
}

std::string runtime_csv(const RuntimeReport& r, std::size_t views) {
  auto out = csv_stream();
  out << "views,repetitions,mean_seconds,mean_iterations,iteration_std\n"
      << views << ',' << r.repetitions << ',' << r.mean_seconds << ',' << r.mean_iterations << ','
      << r.iteration_std << '\n';
  return out.str();
}

json runtime_json(const RuntimeReport& r, std::size_t views) {
  return {{"protocol", "runtime"},
          {"views", views},
          {"repetitions", r.repetitions},
          {"mean_seconds", r.mean_seconds},
          {"mean_iterations", r.mean_iterations},
          {"iteration_std", r.iteration_std}};
}

}  // namespace planehec
