#include "planehec/simulator.hpp"

#include <Eigen/Geometry>
#include <cmath>
#include <random>
#include <sstream>

#include "planehec/error.hpp"

namespace planehec {
namespace {

constexpr double kHalfFovX = 29.0 * std::numbers::pi / 180.0;
constexpr double kHalfFovY = 22.5 * std::numbers::pi / 180.0;
constexpr double kPatchHalf = 0.25;
constexpr double kAimHalf = 0.15;
constexpr int kMaxPoseAttempts = 100;

using Rng = std::mt19937_64;

double uniform(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

double gaussian(Rng& rng) { return std::normal_distribution<double>(0.0, 1.0)(rng); }

// Any orthonormal pair spanning the plane perpendicular to n.
std::pair<Eigen::Vector3d, Eigen::Vector3d> tangent_basis(const Eigen::Vector3d& n) {
  const Eigen::Vector3d helper =
      std::abs(n.x()) < 0.9 ? Eigen::Vector3d::UnitX() : Eigen::Vector3d::UnitY();
  const Eigen::Vector3d e1 = (helper - helper.dot(n) * n).normalized();
  return {e1, n.cross(e1)};
}

bool in_frustum(const Eigen::Vector3d& p, double near, double far) {
  return p.z() >= near && p.z() <= far && std::abs(p.x()) <= std::tan(kHalfFovX) * p.z() &&
         std::abs(p.y()) <= std::tan(kHalfFovY) * p.z();
}

Plane random_base_plane(Rng& rng) {
  const double tilt = uniform(rng, 0.0, 20.0 * std::numbers::pi / 180.0);
  const double azimuth = uniform(rng, 0.0, 2.0 * std::numbers::pi);
  const Eigen::Vector3d normal(std::sin(tilt) * std::cos(azimuth),
                               std::sin(tilt) * std::sin(azimuth), std::cos(tilt));
  const Eigen::Vector3d anchor(0.5, 0.0, uniform(rng, -0.3, -0.1));
  return canonicalize(Plane{normal, -normal.dot(anchor)});
}

struct ViewGeometry {
  RigidTransform base_from_camera;
  Eigen::Vector3d aim;
};

ViewGeometry sample_view(Rng& rng, const Plane& plane, const Eigen::Vector3d& anchor,
                         const SceneConfig& cfg) {
  const auto [e1, e2] = tangent_basis(plane.normal);
  const Eigen::Vector3d aim =
      anchor + uniform(rng, -kAimHalf, kAimHalf) * e1 + uniform(rng, -kAimHalf, kAimHalf) * e2;

  // Boresight starts at -normal, tilted by up to rotation_diversity.
  const double tilt = cfg.rotation_diversity * std::sqrt(uniform(rng, 0.0, 1.0));
  const double azimuth = uniform(rng, 0.0, 2.0 * std::numbers::pi);
  const double roll = uniform(rng, -cfg.rotation_diversity, cfg.rotation_diversity);
  const Eigen::Vector3d tilt_axis = std::cos(azimuth) * e1 + std::sin(azimuth) * e2;
  const Eigen::Matrix3d tilt_rot = exp_so3(tilt * tilt_axis);

  Eigen::Matrix3d cam_axes;  // columns: camera x, y, z in the base frame
  cam_axes.col(2) = tilt_rot * (-plane.normal);
  cam_axes.col(0) = tilt_rot * e1;
  cam_axes.col(1) = cam_axes.col(2).cross(cam_axes.col(0));
  cam_axes = exp_so3(roll * cam_axes.col(2)) * cam_axes;

  const double distance = uniform(rng, cfg.near, cfg.far);
  ViewGeometry view;
  view.aim = aim;
  view.base_from_camera.rotation = cam_axes;
  view.base_from_camera.translation = aim - distance * cam_axes.col(2);
  return view;
}

}  // namespace

void NoiseSpec::validate() const {
  if (!(depth_sigma >= 0.0) || !(plane_rotation_sigma >= 0.0) ||
      !(plane_translation_sigma >= 0.0) || !(outlier_fraction >= 0.0) ||
      !(outlier_fraction < 1.0)) {
    throw Error(ErrorCode::kInvalidArgument,
                "noise spec requires non-negative sigmas and outlier_fraction in [0, 1)");
  }
}

void SceneConfig::validate() const {
  noise.validate();
  if (!(near > 0.0) || !(near < far)) {
    throw Error(ErrorCode::kInvalidArgument, "scene depth range requires 0 < near < far");
  }
  if (num_views < 4) {
    throw Error(ErrorCode::kInvalidArgument, "scene needs num_views >= 4");
  }
  if (!(rotation_diversity >= 0.0) || rotation_diversity >= std::numbers::pi / 2) {
    throw Error(ErrorCode::kInvalidArgument, "rotation_diversity must lie in [0, pi/2)");
  }
  if (points_per_view < 3) {
    throw Error(ErrorCode::kInvalidArgument, "points_per_view must be >= 3");
  }
}

Observations SyntheticDataset::truth_observations() const {
  Observations obs;
  obs.reserve(views.size());
  for (const auto& v : views) obs.push_back({v.truth_plane, v.tcp_pose});
  return obs;
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  // splitmix64 finalizer over a combined key
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

RigidTransform random_rigid_transform(std::uint64_t seed, double max_translation) {
  Rng rng(seed);
  Eigen::Vector4d q(gaussian(rng), gaussian(rng), gaussian(rng), gaussian(rng));
  q.normalize();
  RigidTransform t;
  t.rotation = Eigen::Quaterniond(q(0), q(1), q(2), q(3)).toRotationMatrix();
  for (int i = 0; i < 3; ++i) t.translation(i) = uniform(rng, -max_translation, max_translation);
  return t;
}

SyntheticDataset generate_scene(const SceneConfig& cfg) {
  cfg.validate();
  Rng rng(derive_seed(cfg.seed, 0));

  SyntheticDataset data;
  data.noise = cfg.noise;
  data.plane_noise_seed = derive_seed(cfg.seed, 2);
  data.truth_X = cfg.ground_truth_X ? *cfg.ground_truth_X
                                    : random_rigid_transform(derive_seed(cfg.seed, 1), 0.1);
  if (!is_rotation(data.truth_X.rotation)) {
    throw Error(ErrorCode::kInvalidArgument, "ground-truth X rotation is not orthonormal");
  }
  data.truth_plane_base = cfg.plane_base ? canonicalize(*cfg.plane_base) : random_base_plane(rng);

  const Plane& plane = data.truth_plane_base;
  const Eigen::Vector3d& center = cfg.workspace_center;
  const Eigen::Vector3d anchor = center - eval_plane(plane, center) * plane.normal;
  const auto [e1, e2] = tangent_basis(plane.normal);

  const auto wanted = static_cast<std::size_t>(cfg.points_per_view);
  const std::size_t max_draws = 50 * wanted;
  data.views.reserve(static_cast<std::size_t>(cfg.num_views));
  for (int i = 0; i < cfg.num_views; ++i) {
    Rng view_rng(derive_seed(cfg.seed, 1000 + static_cast<std::uint64_t>(i)));
    bool built = false;
    for (int attempt = 0; attempt < kMaxPoseAttempts && !built; ++attempt) {
      const ViewGeometry geom = sample_view(view_rng, plane, anchor, cfg);
      const RigidTransform camera_from_base = geom.base_from_camera.inverse();

      SyntheticView view;
      view.tcp_pose = data.truth_X.inverse() * camera_from_base;
      view.truth_plane = compose_plane(plane, geom.base_from_camera);
      view.cloud.points.reserve(wanted);
      for (std::size_t draw = 0; draw < max_draws && view.cloud.size() < wanted; ++draw) {
        const Eigen::Vector3d q = geom.aim + uniform(view_rng, -kPatchHalf, kPatchHalf) * e1 +
                                  uniform(view_rng, -kPatchHalf, kPatchHalf) * e2;
        const Eigen::Vector3d p = camera_from_base.apply(q);
        if (in_frustum(p, cfg.near, cfg.far)) view.cloud.points.push_back(p);
      }
      if (view.cloud.size() < wanted) continue;

      for (auto& p : view.cloud.points) {
        if (cfg.noise.outlier_fraction > 0.0 &&
            uniform(view_rng, 0.0, 1.0) < cfg.noise.outlier_fraction) {
          const double z = uniform(view_rng, cfg.near, cfg.far);
          p = Eigen::Vector3d(uniform(view_rng, -1.0, 1.0) * std::tan(kHalfFovX) * z,
                              uniform(view_rng, -1.0, 1.0) * std::tan(kHalfFovY) * z, z);
        } else if (cfg.noise.depth_sigma > 0.0) {
          p += cfg.noise.depth_sigma * gaussian(view_rng) * p.normalized();
        }
      }
      data.views.push_back(std::move(view));
      built = true;
    }
    if (!built) {
      std::ostringstream msg;
      msg << "scene construction: view " << i << " found no pose with " << wanted
          << " visible plane points inside depth band [" << cfg.near << ", " << cfg.far << "]";
      throw Error(ErrorCode::kSceneConstruction, msg.str());
    }
  }
  return data;
}

Plane perturb_plane(const Plane& plane, const NoiseSpec& spec, std::uint64_t seed) {
  spec.validate();
  Rng rng(seed);
  const auto [e1, e2] = tangent_basis(plane.normal);
  const double azimuth = uniform(rng, 0.0, 2.0 * std::numbers::pi);
  const double angle = std::abs(gaussian(rng)) * spec.plane_rotation_sigma;
  const double shift = gaussian(rng) * spec.plane_translation_sigma;
  const Eigen::Vector3d axis = std::cos(azimuth) * e1 + std::sin(azimuth) * e2;
  return canonicalize(Plane{exp_so3(angle * axis) * plane.normal, plane.offset + shift});
}

}  // namespace planehec
