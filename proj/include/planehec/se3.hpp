#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace planehec {

using Vector6d = Eigen::Matrix<double, 6, 1>;
using Matrix46d = Eigen::Matrix<double, 4, 6>;

/// Element of SE(3) stored as a rotation and a translation.
///
/// Applies to points as p' = rotation * p + translation. Composition follows
/// homogeneous matrix multiplication, so (a * b).apply(p) == a.apply(b.apply(p)).
struct RigidTransform {
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();

  static RigidTransform identity() { return {}; }
  static RigidTransform from_matrix(const Eigen::Matrix4d& m);
  static RigidTransform pure_translation(const Eigen::Vector3d& t);

  Eigen::Matrix4d matrix() const;
  RigidTransform inverse() const;
  Eigen::Vector3d apply(const Eigen::Vector3d& p) const { return rotation * p + translation; }

  friend RigidTransform operator*(const RigidTransform& a, const RigidTransform& b);
};

/// se(3) element ordered (translational | rotational).
struct Twist {
  Eigen::Vector3d rho = Eigen::Vector3d::Zero();
  Eigen::Vector3d phi = Eigen::Vector3d::Zero();

  Vector6d vector() const;
  static Twist from_vector(const Vector6d& v);
};

Eigen::Matrix3d skew(const Eigen::Vector3d& v);

Eigen::Matrix3d exp_so3(const Eigen::Vector3d& phi);
Eigen::Vector3d log_so3(const Eigen::Matrix3d& rotation, bool* near_branch_cut = nullptr);

RigidTransform exp_se3(const Twist& xi);

// The canonical logarithm has |phi| <= pi. When the rotation angle is within
// 1e-9 of pi the axis sign is ambiguous; a value is still returned and
// *near_branch_cut is set.
Twist log_se3(const RigidTransform& transform, bool* near_branch_cut = nullptr);

/// Derivative of exp(xi) * T * p with respect to the left perturbation xi at
/// zero, in homogeneous coordinates: [[I, -skew(R p + t)], [0, 0]].
Matrix46d point_action_jacobian(const RigidTransform& transform, const Eigen::Vector3d& p);

/// Nearest rotation to a positive multiple of `m` (SVD with det correction).
/// Throws Error(kDegenerateInput) when `m` has rank < 2.
Eigen::Matrix3d project_to_so3(const Eigen::Matrix3d& m);

/// Geodesic distance on SO(3) in radians.
double rotation_angle_between(const Eigen::Matrix3d& a, const Eigen::Matrix3d& b);

bool is_rotation(const Eigen::Matrix3d& r, double tol = 1e-9);

}  // namespace planehec
