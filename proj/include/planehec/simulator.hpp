#pragma once

#include <cstdint>
#include <numbers>
#include <optional>
#include <vector>

#include "planehec/plane.hpp"
#include "planehec/plane_detection.hpp"
#include "planehec/se3.hpp"

namespace planehec {

struct NoiseSpec {
  double depth_sigma = 0.0035;           // meters, along the viewing ray
  double plane_rotation_sigma = 0.0;     // radians, applied by perturb_plane
  double plane_translation_sigma = 0.0;  // meters, applied by perturb_plane
  double outlier_fraction = 0.0;         // [0, 1)

  static NoiseSpec none() { return {0.0, 0.0, 0.0, 0.0}; }
  /// Depth noise plus plane-level noise sized so the total per-view detection
  /// error is about 0.27 deg / 0.64 mm.
  static NoiseSpec calibrated() { return {0.0035, 0.0045, 0.0006, 0.0}; }
  void validate() const;
};

struct SceneConfig {
  std::optional<RigidTransform> ground_truth_X;  // random when empty
  std::optional<Plane> plane_base;               // random when empty
  int num_views = 30;
  double near = 0.3;
  double far = 0.8;
  double rotation_diversity = 30.0 * std::numbers::pi / 180.0;  // max camera tilt / roll
  int points_per_view = 2000;
  Eigen::Vector3d workspace_center{0.25, 0.0, 0.0};  // base frame; aim region centers on its foot
  NoiseSpec noise;
  std::uint64_t seed = 0;

  void validate() const;
};

struct SyntheticView {
  RigidTransform tcp_pose;  // base -> TCP
  PointCloud cloud;         // camera frame
  Plane truth_plane;        // camera frame, canonical
};

struct SyntheticDataset {
  RigidTransform truth_X;
  Plane truth_plane_base;
  std::vector<SyntheticView> views;
  NoiseSpec noise;                    // as configured
  std::uint64_t plane_noise_seed = 0;  // view i perturbs with derive_seed(this, i)

  /// Exact camera-frame planes paired with their poses.
  Observations truth_observations() const;
};

/// Cameras sit on the side the canonical base plane's normal points to, aimed
/// at random points of a 0.3 m x 0.3 m region of the plane, with tilt and roll
/// up to rotation_diversity and boresight distance uniform in [near, far].
/// Points are uniform on a 0.5 m square patch around the aim point, clipped to
/// a 58 x 45 degree frustum and the depth band. View i draws from its own
/// sub-seed, so the output is a pure function of cfg.
SyntheticDataset generate_scene(const SceneConfig& cfg);

/// Rotates the normal by |N(0, plane_rotation_sigma)| about a random axis
/// perpendicular to it and shifts the offset by N(0, plane_translation_sigma).
/// Random draws do not depend on the sigmas, so equal seeds give perturbations
/// that scale linearly with them.
Plane perturb_plane(const Plane& plane, const NoiseSpec& spec, std::uint64_t seed);

/// Decorrelated child seed; used for per-view and per-trial streams.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

RigidTransform random_rigid_transform(std::uint64_t seed, double max_translation);

}  // namespace planehec
