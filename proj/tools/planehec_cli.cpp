// planehec command line: simulate, detect, calibrate, evaluate.
#include <CLI11.hpp>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "planehec/planehec.h"

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitIo = 2;
constexpr int kExitSolver = 3;

int exit_code_for(phc_status status) {
  switch (status) {
    case PHC_OK: return 0;
    case PHC_ERR_INVALID_ARGUMENT: return kExitUsage;
    case PHC_ERR_IO:
    case PHC_ERR_PARSE: return kExitIo;
    default: return kExitSolver;
  }
}

int report_failure(phc_status status) {
  std::cerr << "error: " << phc_last_error() << "\n";
  return exit_code_for(status);
}

bool read_file(const std::string& path, std::string& text) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return false;
  std::ostringstream ss;
  ss << in.rdbuf();
  text = ss.str();
  return true;
}

bool write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  return static_cast<bool>(out);
}

std::string plane_json(const double p[4]) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "{\"normal\": [%.17g, %.17g, %.17g], \"d\": %.17g}", p[0], p[1],
                p[2], p[3]);
  return buf;
}

struct DetectFlags {
  double near_depth = 0.3;
  double far_depth = 0.8;
  double threshold = 0.005;
  int max_iterations = 200;
  double min_inlier_ratio = 0.6;
  uint64_t seed = 0;

  void add(CLI::App* app, const std::string& seed_flag) {
    app->add_option("--near", near_depth, "depth crop lower bound (m)")->capture_default_str();
    app->add_option("--far", far_depth, "depth crop upper bound (m)")->capture_default_str();
    app->add_option("--threshold", threshold, "RANSAC inlier distance (m)")->capture_default_str();
    app->add_option("--ransac-iterations", max_iterations)->capture_default_str();
    app->add_option("--min-inlier-ratio", min_inlier_ratio)->capture_default_str();
    app->add_option(seed_flag, seed, "RANSAC seed")->capture_default_str();
  }

  phc_detect_options options() const {
    phc_detect_options o;
    phc_detect_options_default(&o);
    o.near_depth = near_depth;
    o.far_depth = far_depth;
    o.distance_threshold = threshold;
    o.max_iterations = max_iterations;
    o.min_inlier_ratio = min_inlier_ratio;
    o.seed = seed;
    return o;
  }
};

phc_pose_convention parse_convention(const std::string& name) {
  if (name == "base_to_tcp") return PHC_POSE_BASE_TO_TCP;
  if (name == "tcp_in_base") return PHC_POSE_TCP_IN_BASE;
  return PHC_POSE_FROM_MANIFEST;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hand-eye calibration from plane observations"};
  app.set_version_flag("--version", phc_version());
  app.require_subcommand(1);

  // simulate
  auto* sim = app.add_subcommand("simulate", "write a synthetic dataset");
  std::string sim_config;
  std::string sim_out;
  bool sim_ascii = false;
  bool sim_inline = false;
  std::string sim_convention = "base_to_tcp";
  sim->add_option("--config", sim_config, "scene config JSON")->required();
  sim->add_option("--out", sim_out, "output directory")->required();
  sim->add_flag("--ascii", sim_ascii, "write ASCII PLY clouds");
  sim->add_flag("--inline-planes", sim_inline, "store noisy truth planes instead of clouds");
  sim->add_option("--pose-convention", sim_convention)
      ->check(CLI::IsMember({"base_to_tcp", "tcp_in_base"}))
      ->capture_default_str();

  // detect
  auto* det = app.add_subcommand("detect", "fit the dominant plane of a PLY cloud");
  std::string det_cloud;
  DetectFlags det_flags;
  det->add_option("--cloud", det_cloud, "PLY file")->required();
  det_flags.add(det, "--seed");

  // calibrate
  auto* cal = app.add_subcommand("calibrate", "estimate X from a dataset manifest");
  std::string cal_dataset;
  std::string cal_out;
  std::string cal_convention = "manifest";
  bool cal_no_refine = false;
  DetectFlags cal_flags;
  cal->add_option("--dataset", cal_dataset, "manifest.json")->required();
  cal->add_option("--out", cal_out, "report JSON (stdout when omitted)");
  cal->add_flag("--no-refine", cal_no_refine, "closed form only");
  cal->add_option("--pose-convention", cal_convention, "override the manifest convention")
      ->check(CLI::IsMember({"manifest", "base_to_tcp", "tcp_in_base"}))
      ->capture_default_str();
  cal_flags.add(cal, "--detect-seed");

  // evaluate
  auto* ev = app.add_subcommand("evaluate", "run an evaluation protocol over a dataset pool");
  std::string ev_protocol;
  std::string ev_dataset;
  std::string ev_out;
  std::string ev_json;
  std::size_t ev_trials = 50;
  uint64_t ev_seed = 0;
  std::vector<std::size_t> ev_sizes;
  std::vector<double> ev_rot_deg{0.0, 0.25, 0.5, 1.0};
  std::vector<double> ev_trans_mm{0.0, 0.5, 1.0, 2.0};
  std::size_t ev_batch = 15;
  std::size_t ev_reps = 20;
  std::string ev_convention = "manifest";
  DetectFlags ev_flags;
  ev->add_option("protocol", ev_protocol)
      ->required()
      ->check(CLI::IsMember({"table1", "reconstruct", "noise-sweep", "runtime"}));
  ev->add_option("--dataset", ev_dataset, "manifest.json")->required();
  ev->add_option("--out", ev_out, "CSV table (stdout when omitted)");
  ev->add_option("--json", ev_json, "JSON summary");
  ev->add_option("--trials", ev_trials)->capture_default_str()->check(CLI::PositiveNumber);
  ev->add_option("--seed", ev_seed)->capture_default_str();
  ev->add_option("--sizes", ev_sizes, "views per calibration (table1, reconstruct)")->delimiter(',');
  ev->add_option("--rotation-sigmas-deg", ev_rot_deg)->delimiter(',')->capture_default_str();
  ev->add_option("--translation-sigmas-mm", ev_trans_mm)->delimiter(',')->capture_default_str();
  ev->add_option("--batch", ev_batch, "views per noise-sweep calibration")->capture_default_str();
  ev->add_option("--repetitions", ev_reps, "runtime repetitions")->capture_default_str();
  ev->add_option("--pose-convention", ev_convention)
      ->check(CLI::IsMember({"manifest", "base_to_tcp", "tcp_in_base"}))
      ->capture_default_str();
  ev_flags.add(ev, "--detect-seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitUsage;
  }

  if (*sim) {
    std::string text;
    if (!read_file(sim_config, text)) {
      std::cerr << "error: cannot read " << sim_config << "\n";
      return kExitIo;
    }
    int flags = 0;
    if (sim_ascii) flags |= PHC_SIM_ASCII_CLOUDS;
    if (sim_inline) flags |= PHC_SIM_INLINE_PLANES;
    if (sim_convention == "tcp_in_base") flags |= PHC_SIM_TCP_IN_BASE;
    const phc_status s = phc_simulate(text.c_str(), sim_out.c_str(), flags);
    return s == PHC_OK ? 0 : report_failure(s);
  }

  if (*det) {
    phc_cloud* cloud = nullptr;
    phc_status s = phc_cloud_load(det_cloud.c_str(), &cloud);
    if (s != PHC_OK) return report_failure(s);
    const phc_detect_options o = det_flags.options();
    double plane[4];
    s = phc_detect_plane(cloud, &o, plane, nullptr);
    phc_cloud_free(cloud);
    if (s != PHC_OK) return report_failure(s);
    std::cout << plane_json(plane) << "\n";
    return 0;
  }

  if (*cal) {
    const phc_detect_options o = cal_flags.options();
    phc_dataset* ds = nullptr;
    phc_status s = phc_dataset_load(cal_dataset.c_str(), &o, parse_convention(cal_convention), &ds);
    if (s != PHC_OK) return report_failure(s);
    phc_calibrate_options co;
    phc_calibrate_options_default(&co);
    co.run_refinement = cal_no_refine ? 0 : 1;
    phc_report* report = nullptr;
    s = phc_calibrate(ds, &co, &report);
    phc_dataset_free(ds);
    if (s != PHC_OK) return report_failure(s);
    if (cal_out.empty()) {
      std::cout << phc_report_json(report);
    } else {
      s = phc_report_save(report, cal_out.c_str());
    }
    phc_report_free(report);
    return s == PHC_OK ? 0 : report_failure(s);
  }

  // evaluate
  if (ev_sizes.empty()) {
    ev_sizes = ev_protocol == "table1" ? std::vector<std::size_t>{4, 5, 10, 15, 20, 25, 30}
                                       : std::vector<std::size_t>{4, 5, 10, 15, 20, 30};
  }
  std::vector<double> rot;
  std::vector<double> trans;
  for (double d : ev_rot_deg) rot.push_back(d * std::numbers::pi / 180.0);
  for (double mm : ev_trans_mm) trans.push_back(mm * 1e-3);

  const phc_detect_options o = ev_flags.options();
  phc_dataset* ds = nullptr;
  phc_status s = phc_dataset_load(ev_dataset.c_str(), &o, parse_convention(ev_convention), &ds);
  if (s != PHC_OK) return report_failure(s);
  phc_eval_options eo;
  phc_eval_options_default(&eo);
  eo.trials = ev_trials;
  eo.seed = ev_seed;
  eo.sample_sizes = ev_sizes.data();
  eo.sample_size_count = ev_sizes.size();
  eo.rotation_sigmas = rot.data();
  eo.rotation_sigma_count = rot.size();
  eo.translation_sigmas = trans.data();
  eo.translation_sigma_count = trans.size();
  eo.batch_size = ev_batch;
  eo.repetitions = ev_reps;
  phc_table* table = nullptr;
  s = phc_evaluate(ds, ev_protocol.c_str(), &eo, &table);
  phc_dataset_free(ds);
  if (s != PHC_OK) return report_failure(s);
  int rc = 0;
  if (ev_out.empty()) {
    std::cout << phc_table_csv(table);
  } else if (!write_file(ev_out, phc_table_csv(table))) {
    std::cerr << "error: cannot write " << ev_out << "\n";
    rc = kExitIo;
  }
  if (rc == 0 && !ev_json.empty() && !write_file(ev_json, std::string(phc_table_json(table)) + "\n")) {
    std::cerr << "error: cannot write " << ev_json << "\n";
    rc = kExitIo;
  }
  phc_table_free(table);
  return rc;
}
