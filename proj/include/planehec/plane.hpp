#pragma once

#include <Eigen/Core>
#include <vector>

#include "planehec/se3.hpp"

namespace planehec {

/// Plane as the row vector (normal^T, offset): points p on it satisfy
/// normal . p + offset = 0.
///
/// Canonical form has a unit normal and offset >= 0; when the offset is
/// (numerically) zero the first nonzero normal component is positive. In a
/// camera frame this orients the normal toward the camera.
struct Plane {
  Eigen::Vector3d normal = Eigen::Vector3d::UnitZ();
  double offset = 0.0;

  Eigen::RowVector4d row() const;
  static Plane from_row(const Eigen::RowVector4d& row);
};

/// A camera-frame plane paired with the TCP pose A_i (base frame -> TCP frame).
struct Observation {
  Plane plane;
  RigidTransform tcp_pose;
};

using Observations = std::vector<Observation>;

double eval_plane(const Plane& plane, const Eigen::Vector3d& p);

/// Throws Error(kInvalidPlane) for a zero normal.
Plane canonicalize(const Plane& plane);

/// `plane` lives in frame F, `transform` maps frame-G points into frame F.
/// Returns the canonical plane in frame G (the row-vector product M * T).
Plane compose_plane(const Plane& plane, const RigidTransform& transform);

/// Angle in radians between the normals of two planes.
double normal_angle(const Plane& a, const Plane& b);

}  // namespace planehec
