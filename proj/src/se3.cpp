#include "planehec/se3.hpp"

#include <Eigen/LU>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <numbers>

#include "planehec/error.hpp"

namespace planehec {
namespace {

constexpr double kSmallAngle = 1e-6;
// The closed forms of the V and V^-1 coefficients lose most of their digits
// well above kSmallAngle; below this angle they come from longer series.
constexpr double kSeriesAngle = 0.1;

// (1 - cos t) / t^2 without cancellation.
double half_angle_coefficient(double theta) {
  const double s = std::sin(0.5 * theta) / (0.5 * theta);
  return 0.5 * s * s;
}

}  // namespace

RigidTransform RigidTransform::from_matrix(const Eigen::Matrix4d& m) {
  RigidTransform t;
  t.rotation = m.topLeftCorner<3, 3>();
  t.translation = m.topRightCorner<3, 1>();
  return t;
}

RigidTransform RigidTransform::pure_translation(const Eigen::Vector3d& t) {
  RigidTransform out;
  out.translation = t;
  return out;
}

Eigen::Matrix4d RigidTransform::matrix() const {
  Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
  m.topLeftCorner<3, 3>() = rotation;
  m.topRightCorner<3, 1>() = translation;
  return m;
}

RigidTransform RigidTransform::inverse() const {
  RigidTransform inv;
  inv.rotation = rotation.transpose();
  inv.translation = -(inv.rotation * translation);
  return inv;
}

RigidTransform operator*(const RigidTransform& a, const RigidTransform& b) {
  RigidTransform out;
  out.rotation = a.rotation * b.rotation;
  out.translation = a.rotation * b.translation + a.translation;
  return out;
}

Vector6d Twist::vector() const {
  Vector6d v;
  v << rho, phi;
  return v;
}

Twist Twist::from_vector(const Vector6d& v) {
  return Twist{v.head<3>(), v.tail<3>()};
}

Eigen::Matrix3d skew(const Eigen::Vector3d& v) {
  Eigen::Matrix3d s;
  s << 0.0, -v.z(), v.y(),
       v.z(), 0.0, -v.x(),
       -v.y(), v.x(), 0.0;
  return s;
}

Eigen::Matrix3d exp_so3(const Eigen::Vector3d& phi) {
  const double theta = phi.norm();
  const Eigen::Matrix3d k = skew(phi);
  double a, b;
  if (theta < kSmallAngle) {
    const double t2 = theta * theta;
    a = 1.0 - t2 / 6.0;
    b = 0.5 - t2 / 24.0;
  } else {
    a = std::sin(theta) / theta;
    b = half_angle_coefficient(theta);
  }
  return Eigen::Matrix3d::Identity() + a * k + b * k * k;
}

Eigen::Vector3d log_so3(const Eigen::Matrix3d& r, bool* near_branch_cut) {
  const Eigen::Vector3d w(r(2, 1) - r(1, 2), r(0, 2) - r(2, 0), r(1, 0) - r(0, 1));
  const double sin2 = w.norm();  // 2 sin(theta)
  const double cos2 = r.trace() - 1.0;  // 2 cos(theta)
  const double theta = std::atan2(sin2, cos2);
  if (near_branch_cut) *near_branch_cut = std::abs(theta - std::numbers::pi) < 1e-9;

  if (theta < kSmallAngle) {
    // theta / (2 sin theta) ~ 1/2 + theta^2/12
    return (0.5 + theta * theta / 12.0) * w;
  }
  if (theta < std::numbers::pi - 1e-3) {
    return theta / sin2 * w;
  }
  // Near pi the antisymmetric part vanishes; recover the axis from the
  // symmetric part a a^T = (R + R^T)/2 - cos(theta) I, scaled by 1 - cos(theta).
  const double c = 0.5 * cos2;
  const Eigen::Matrix3d s = 0.5 * (r + r.transpose()) - c * Eigen::Matrix3d::Identity();
  Eigen::Index col = 0;
  s.diagonal().maxCoeff(&col);
  Eigen::Vector3d axis = s.col(col) / std::sqrt(std::max(s(col, col), 1e-300));
  axis.normalize();
  if (axis.dot(w) < 0.0) axis = -axis;
  return theta * axis;
}

RigidTransform exp_se3(const Twist& xi) {
  const double theta = xi.phi.norm();
  const Eigen::Matrix3d k = skew(xi.phi);
  double b, c;
  const double t2 = theta * theta;
  if (theta < kSmallAngle) {
    b = 0.5 - t2 / 24.0;
    c = 1.0 / 6.0 - t2 / 120.0;
  } else if (theta < kSeriesAngle) {
    b = half_angle_coefficient(theta);
    c = 1.0 / 6.0 - t2 / 120.0 * (1.0 - t2 / 42.0 * (1.0 - t2 / 72.0 * (1.0 - t2 / 110.0)));
  } else {
    b = half_angle_coefficient(theta);
    c = (theta - std::sin(theta)) / (t2 * theta);
  }
  const Eigen::Matrix3d v = Eigen::Matrix3d::Identity() + b * k + c * k * k;
  RigidTransform out;
  out.rotation = exp_so3(xi.phi);
  out.translation = v * xi.rho;
  return out;
}

Twist log_se3(const RigidTransform& transform, bool* near_branch_cut) {
  Twist xi;
  xi.phi = log_so3(transform.rotation, near_branch_cut);
  const double theta = xi.phi.norm();
  const Eigen::Matrix3d k = skew(xi.phi);
  double e;
  const double t2 = theta * theta;
  if (theta < kSmallAngle) {
    e = 1.0 / 12.0 + t2 / 720.0;
  } else if (theta < kSeriesAngle) {
    e = 1.0 / 12.0 + t2 / 720.0 + t2 * t2 / 30240.0 + t2 * t2 * t2 / 1209600.0 +
        t2 * t2 * t2 * t2 / 47900160.0;
  } else {
    e = (1.0 - theta * std::sin(theta) / (2.0 * (1.0 - std::cos(theta)))) / (theta * theta);
  }
  const Eigen::Matrix3d v_inv = Eigen::Matrix3d::Identity() - 0.5 * k + e * k * k;
  xi.rho = v_inv * transform.translation;
  return xi;
}

Matrix46d point_action_jacobian(const RigidTransform& transform, const Eigen::Vector3d& p) {
  Matrix46d j = Matrix46d::Zero();
  j.topLeftCorner<3, 3>().setIdentity();
  j.topRightCorner<3, 3>() = -skew(transform.apply(p));
  return j;
}

Eigen::Matrix3d project_to_so3(const Eigen::Matrix3d& m) {
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Eigen::Vector3d s = svd.singularValues();
  if (!(s(0) > 0.0) || s(1) <= 1e-12 * s(0)) {
    throw Error(ErrorCode::kDegenerateInput, "project_to_so3: input has rank < 2");
  }
  const Eigen::Matrix3d u = svd.matrixU();
  const Eigen::Matrix3d v = svd.matrixV();
  Eigen::Vector3d d(1.0, 1.0, (u * v.transpose()).determinant() < 0.0 ? -1.0 : 1.0);
  return u * d.asDiagonal() * v.transpose();
}

double rotation_angle_between(const Eigen::Matrix3d& a, const Eigen::Matrix3d& b) {
  return log_so3(a.transpose() * b).norm();
}

bool is_rotation(const Eigen::Matrix3d& r, double tol) {
  return (r.transpose() * r - Eigen::Matrix3d::Identity()).norm() <= tol &&
         std::abs(r.determinant() - 1.0) <= tol;
}

}  // namespace planehec
