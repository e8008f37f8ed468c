#include "planehec/plane.hpp"

#include <algorithm>
#include <cmath>

#include "planehec/error.hpp"

namespace planehec {

Eigen::RowVector4d Plane::row() const {
  return {normal.x(), normal.y(), normal.z(), offset};
}

Plane Plane::from_row(const Eigen::RowVector4d& row) {
  return Plane{row.head<3>().transpose(), row(3)};
}

double eval_plane(const Plane& plane, const Eigen::Vector3d& p) {
  return plane.normal.dot(p) + plane.offset;
}

Plane canonicalize(const Plane& plane) {
  const double norm = plane.normal.norm();
  if (!(norm > 0.0) || !std::isfinite(norm) || !std::isfinite(plane.offset)) {
    throw Error(ErrorCode::kInvalidPlane, "plane normal must be finite and nonzero");
  }
  Plane out{plane.normal / norm, plane.offset / norm};
  bool flip = out.offset < 0.0;
  if (std::abs(out.offset) < 1e-12) {
    for (int i = 0; i < 3; ++i) {
      if (out.normal(i) != 0.0) {
        flip = out.normal(i) < 0.0;
        break;
      }
    }
  }
  if (flip) {
    out.normal = -out.normal;
    out.offset = -out.offset;
  }
  return out;
}

Plane compose_plane(const Plane& plane, const RigidTransform& transform) {
  return canonicalize(Plane::from_row(plane.row() * transform.matrix()));
}

double normal_angle(const Plane& a, const Plane& b) {
  const double c = a.normal.cross(b.normal).norm();
  return std::atan2(c, a.normal.dot(b.normal));
}

}  // namespace planehec
