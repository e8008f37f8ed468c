#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <functional>
#include <fstream>

#include "planehec/dataset_io.hpp"
#include "planehec/error.hpp"
#include "test_util.hpp"

namespace planehec {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "planehec_test_io" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

SceneConfig small_scene(std::uint64_t seed, NoiseSpec noise = NoiseSpec::none()) {
  SceneConfig cfg;
  cfg.seed = seed;
  cfg.num_views = 8;
  cfg.points_per_view = 800;
  cfg.noise = noise;
  return cfg;
}

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error raised";
  return ErrorCode::kInvalidArgument;
}

TEST(Manifest, JsonRoundTrip) {
  testing::Gen g(91);
  DatasetManifest m;
  m.pose_convention = PoseConvention::kTcpInBase;
  for (int i = 0; i < 3; ++i) {
    ManifestView v;
    v.pose = g.transform().matrix();
    if (i == 1) {
      v.plane = g.plane();
    } else {
      v.cloud_path = "view_" + std::to_string(i) + ".ply";
    }
    m.views.push_back(v);
  }
  const DatasetManifest back = manifest_from_json(json::parse(to_json(m).dump()));
  EXPECT_EQ(back.pose_convention, PoseConvention::kTcpInBase);
  ASSERT_EQ(back.views.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(back.views[i].pose, m.views[i].pose);
    EXPECT_EQ(back.views[i].cloud_path, m.views[i].cloud_path);
    EXPECT_EQ(back.views[i].plane.has_value(), m.views[i].plane.has_value());
  }
  EXPECT_EQ(back.views[1].plane->normal, m.views[1].plane->normal);
}

TEST(Manifest, SchemaErrors) {
  const json pose = transform_to_json(RigidTransform::identity());
  const json both = {{"version", 1},
                     {"pose_convention", "base_to_tcp"},
                     {"views", {{{"pose", pose}, {"cloud_path", "a.ply"}, {"plane", {{"normal", {0, 0, 1}}, {"d", 1}}}}}}};
  EXPECT_EQ(code_of([&] { manifest_from_json(both); }), ErrorCode::kParse);
  const json neither = {{"version", 1}, {"pose_convention", "base_to_tcp"}, {"views", {{{"pose", pose}}}}};
  EXPECT_EQ(code_of([&] { manifest_from_json(neither); }), ErrorCode::kParse);
  json bad_version = neither;
  bad_version["version"] = 7;
  EXPECT_EQ(code_of([&] { manifest_from_json(bad_version); }), ErrorCode::kParse);
  json bad_convention = neither;
  bad_convention["pose_convention"] = "camera_in_world";
  EXPECT_EQ(code_of([&] { manifest_from_json(bad_convention); }), ErrorCode::kParse);
  const json short_pose = {{"version", 1}, {"pose_convention", "base_to_tcp"}, {"views", {{{"pose", {1, 2, 3}}, {"cloud_path", "a.ply"}}}}};
  EXPECT_EQ(code_of([&] { manifest_from_json(short_pose); }), ErrorCode::kParse);
}

TEST(IngestPose, ToleranceAndReorthonormalization) {
  testing::Gen g(92);
  const RigidTransform t = g.transform();
  Eigen::Matrix4d m = t.matrix();
  m(0, 1) += 1e-8;
  const RigidTransform in = ingest_pose(m);
  EXPECT_TRUE(is_rotation(in.rotation, 1e-12));
  EXPECT_LE(rotation_angle_between(in.rotation, t.rotation), 1e-7);

  Eigen::Matrix4d skewed = t.matrix();
  skewed(0, 1) += 1e-3;
  EXPECT_EQ(code_of([&] { ingest_pose(skewed); }), ErrorCode::kParse);
  Eigen::Matrix4d mirrored = t.matrix();
  mirrored.col(2) *= -1;
  mirrored(3, 2) = 0;
  EXPECT_EQ(code_of([&] { ingest_pose(mirrored); }), ErrorCode::kParse);
  Eigen::Matrix4d bottom = t.matrix();
  bottom(3, 0) = 0.5;
  EXPECT_EQ(code_of([&] { ingest_pose(bottom); }), ErrorCode::kParse);
}

TEST(Simulation, WritesLoadableDataset) {
  const fs::path dir = fresh_dir("sim");
  const SyntheticDataset d = generate_scene(small_scene(93));
  write_simulated_dataset(d, dir, {});
  EXPECT_TRUE(fs::exists(dir / "manifest.json"));
  EXPECT_TRUE(fs::exists(dir / "truth.json"));
  EXPECT_TRUE(fs::exists(dir / "view_0007.ply"));
  const DatasetManifest m = read_manifest(dir / "manifest.json");
  const Observations obs = load_observations(m, dir, DetectionOptions{});
  ASSERT_EQ(obs.size(), 8u);
  const json truth = json::parse(read_text_file(dir / "truth.json"));
  const RigidTransform x = transform_from_json(truth.at("X"));
  const CalibrationResult r = calibrate(obs);
  EXPECT_LE((r.X.matrix() - x.matrix()).norm(), 1e-7);
}

TEST(Simulation, PoseConventionsAgree) {
  const SyntheticDataset d = generate_scene(small_scene(94, NoiseSpec::calibrated()));
  const fs::path a = fresh_dir("conv_a");
  const fs::path b = fresh_dir("conv_b");
  SimulationWriteOptions wa;
  wa.inline_planes = true;
  SimulationWriteOptions wb = wa;
  wb.pose_convention = PoseConvention::kTcpInBase;
  write_simulated_dataset(d, a, wa);
  write_simulated_dataset(d, b, wb);
  const Observations oa = load_observations(read_manifest(a / "manifest.json"), a, {});
  const Observations ob = load_observations(read_manifest(b / "manifest.json"), b, {});
  EXPECT_LE((calibrate(oa).X.matrix() - calibrate(ob).X.matrix()).norm(), 1e-9);

  // Mislabelled input: reading tcp_in_base poses as base_to_tcp gives a different answer or fails.
  try {
    const Observations wrong =
        load_observations(read_manifest(b / "manifest.json"), b, {}, PoseConvention::kBaseToTcp);
    EXPECT_GT((calibrate(wrong).X.matrix() - calibrate(oa).X.matrix()).norm(), 1e-3);
  } catch (const Error&) {
  }
}

TEST(Simulation, InlinePlanesCarryPlaneNoise) {
  const SyntheticDataset d = generate_scene(small_scene(95, NoiseSpec::calibrated()));
  const fs::path dir = fresh_dir("inline");
  SimulationWriteOptions w;
  w.inline_planes = true;
  write_simulated_dataset(d, dir, w);
  const Observations obs = load_observations(read_manifest(dir / "manifest.json"), dir, {});
  for (std::size_t i = 0; i < obs.size(); ++i) {
    const Plane expected =
        perturb_plane(d.views[i].truth_plane, d.noise, derive_seed(d.plane_noise_seed, i));
    EXPECT_LE((obs[i].plane.row() - expected.row()).norm(), 1e-15);
    EXPECT_GT(normal_angle(obs[i].plane, d.views[i].truth_plane), 0.0);
  }
}

TEST(Report, RoundTrip) {
  const SyntheticDataset d = generate_scene(small_scene(96, NoiseSpec::calibrated()));
  const CalibrationResult r = calibrate(observation_pool(d, {}));
  const CalibrationReportFile file = CalibrationReportFile::from_result(r, 8, "sha256:abc");
  const CalibrationReportFile back = report_from_json(json::parse(to_json(file).dump(2)));
  EXPECT_EQ(back.X.matrix(), file.X.matrix());
  EXPECT_EQ(back.closed_form_X.matrix(), file.closed_form_X.matrix());
  EXPECT_EQ(back.y_mean, file.y_mean);
  EXPECT_EQ(back.diagnostics.rotation_gap, file.diagnostics.rotation_gap);
  EXPECT_EQ(back.diagnostics.translation_condition, file.diagnostics.translation_condition);
  EXPECT_EQ(back.diagnostics.residual_rms, file.diagnostics.residual_rms);
  ASSERT_TRUE(back.refine.has_value());
  EXPECT_EQ(back.refine->iterations, file.refine->iterations);
  EXPECT_EQ(back.refine->step_norms, file.refine->step_norms);
  EXPECT_EQ(back.refine->final_objective, file.refine->final_objective);
  EXPECT_EQ(back.input_digest, "sha256:abc");
  EXPECT_EQ(back.views, 8u);
  EXPECT_EQ(to_json(back).dump(), to_json(file).dump());
}

TEST(Digest, TracksManifestAndClouds) {
  const fs::path dir = fresh_dir("digest");
  write_simulated_dataset(generate_scene(small_scene(97)), dir, {});
  const std::string a = input_digest(dir / "manifest.json");
  EXPECT_EQ(a.rfind("sha256:", 0), 0u);
  EXPECT_EQ(a.size(), 7u + 64u);
  EXPECT_EQ(a, input_digest(dir / "manifest.json"));
  {
    std::ofstream out(dir / "view_0003.ply", std::ios::binary | std::ios::app);
    out << "x";
  }
  EXPECT_NE(a, input_digest(dir / "manifest.json"));
}

TEST(SceneConfigJson, DefaultsPresetsAndRoundTrip) {
  const SceneConfig defaults = scene_config_from_json(json::object());
  EXPECT_EQ(defaults.num_views, 30);
  EXPECT_FALSE(defaults.ground_truth_X.has_value());

  const SceneConfig cal = scene_config_from_json(json::parse(
      R"({"num_views": 12, "noise": "calibrated", "seed": 5, "depth_range": [0.35, 0.7],
          "ground_truth_X": "random", "plane_base": {"normal": [0, 0, 1], "d": 0.2}})"));
  EXPECT_EQ(cal.num_views, 12);
  EXPECT_EQ(cal.seed, 5u);
  EXPECT_EQ(cal.near, 0.35);
  EXPECT_EQ(cal.noise.plane_rotation_sigma, NoiseSpec::calibrated().plane_rotation_sigma);
  ASSERT_TRUE(cal.plane_base.has_value());

  const SceneConfig back = scene_config_from_json(to_json(cal));
  EXPECT_EQ(to_json(back).dump(), to_json(cal).dump());

  EXPECT_EQ(code_of([] { scene_config_from_json(json::parse(R"({"noise": "loud"})")); }), ErrorCode::kParse);
  EXPECT_EQ(code_of([] { scene_config_from_json(json::parse(R"({"num_views": "many"})")); }), ErrorCode::kParse);
  EXPECT_THROW(scene_config_from_json(json::parse(R"({"num_views": 2})")), Error);
}

TEST(Tables, CsvLayout) {
  Table1Row row;
  row.sample_size = 5;
  const std::string csv = table1_csv({row, row});
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 5);
  EXPECT_EQ(csv.rfind("sample_size,solver,e_r_deg,e_t_mm,e_xy_mm,e_z_mm,trials,excluded\n", 0), 0u);
  NoiseCell cell;
  cell.rotation_sigma = 0.01;
  const json j = noise_sweep_json({cell});
  EXPECT_EQ(j.at("cells").size(), 1u);
  EXPECT_NEAR(j["cells"][0]["rotation_sigma_deg"].get<double>(), 0.5729577951, 1e-9);
  const std::string rt = runtime_csv(RuntimeReport{0.01, 5, 0, 3}, 30);
  EXPECT_NE(rt.find("30,3,"), std::string::npos);
}

}  // namespace
}  // namespace planehec
