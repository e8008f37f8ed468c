#include "planehec/closed_form.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <sstream>

#include "planehec/error.hpp"

namespace planehec {
namespace {

constexpr std::size_t kMinObservations = 4;

void require_observations(std::size_t n, const char* what) {
  if (n < kMinObservations) {
    std::ostringstream msg;
    msg << what << " needs at least " << kMinObservations << " observations, got " << n;
    throw Error(ErrorCode::kInsufficientData, msg.str());
  }
}

bool all_normals_equal(const Observations& obs) {
  for (const auto& o : obs) {
    if ((o.plane.normal - obs.front().plane.normal).norm() > 1e-9) return false;
  }
  return true;
}

bool all_rotations_equal(const Observations& obs) {
  for (const auto& o : obs) {
    if ((o.tcp_pose.rotation - obs.front().tcp_pose.rotation).norm() > 1e-9) return false;
  }
  return true;
}

double stack_residual(const Eigen::MatrixXd& stack, const Eigen::Matrix3d& rotation) {
  const Eigen::Map<const Eigen::Matrix<double, 9, 1>> vec(rotation.data());
  return (stack * vec).squaredNorm() / static_cast<double>(stack.rows());
}

double constraint_rms(const RigidTransform& X, const Observations& obs) {
  double sum = 0.0;
  for (std::size_t j = 0; j + 1 < obs.size(); ++j) {
    const Eigen::RowVector4d g = obs[j].plane.row() * X.matrix() * obs[j].tcp_pose.matrix() -
                                 obs[j + 1].plane.row() * X.matrix() * obs[j + 1].tcp_pose.matrix();
    sum += g.squaredNorm();
  }
  return std::sqrt(sum / (4.0 * static_cast<double>(obs.size() - 1)));
}

using KronBlock = Eigen::Matrix<double, 3, 9>;

KronBlock kron_block(const Eigen::Matrix3d& rot, const Eigen::Vector3d& v) {
  // kron(rot^T, v^T): entry (m, 3c + k) = rot(c, m) * v(k)
  KronBlock block;
  for (int m = 0; m < 3; ++m)
    for (int c = 0; c < 3; ++c)
      for (int k = 0; k < 3; ++k) block(m, 3 * c + k) = rot(c, m) * v(k);
  return block;
}

struct SignedFit {
  Eigen::Matrix3d rotation;
  double residual = 0.0;
  double gap = 1.0;
};

// Rotation fit when view i's plane enters the stack with sign signs[i]. The
// residual is taken at the SO(3) projection, so sign patterns whose null
// vector is far from a rotation score badly.
SignedFit signed_fit(const std::vector<KronBlock>& blocks, const std::vector<int>& signs,
                     std::size_t count) {
  Eigen::Matrix<double, 9, 9> normal = Eigen::Matrix<double, 9, 9>::Zero();
  for (std::size_t j = 0; j + 1 < count; ++j) {
    const KronBlock d = signs[j] * blocks[j] - signs[j + 1] * blocks[j + 1];
    normal.noalias() += d.transpose() * d;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix<double, 9, 9>> eig(normal);
  const Eigen::Matrix<double, 9, 1> v = eig.eigenvectors().col(0);
  const Eigen::Matrix<double, 9, 1> ev = eig.eigenvalues().cwiseMax(0.0);
  const Eigen::Matrix3d raw = Eigen::Map<const Eigen::Matrix3d>(v.data());
  SignedFit best;
  best.residual = std::numeric_limits<double>::infinity();
  const Eigen::Vector3d sv = Eigen::JacobiSVD<Eigen::Matrix3d>(raw).singularValues();
  if (!(sv(0) > 0.0) || sv(1) <= 1e-12 * sv(0)) return best;
  for (const Eigen::Matrix3d& cand : {project_to_so3(raw), project_to_so3(-raw)}) {
    const Eigen::Map<const Eigen::Matrix<double, 9, 1>> x(cand.data());
    const double r = std::sqrt(std::max(x.dot(normal * x), 0.0) / (3.0 * (count - 1)));
    if (r < best.residual) best = {cand, r, ev(1) > 0.0 ? std::sqrt(ev(0) / ev(1)) : 1.0};
  }
  return best;
}

// A camera on the far side of the plane contributes -M_base instead of M_base
// after canonicalization, which the all-positive stack absorbs into a wrong
// but self-consistent X. Search sign patterns exhaustively on a prefix of the
// views, classify the rest under the prefix rotation and compare the full fit
// against the all-positive one.
void check_single_side(const Observations& obs, const ClosedFormConfig& cfg) {
  constexpr std::size_t kPrefix = 8;
  const std::size_t n = obs.size();
  std::vector<KronBlock> blocks;
  blocks.reserve(n);
  for (const auto& o : obs) blocks.push_back(kron_block(o.tcp_pose.rotation, o.plane.normal));

  const std::size_t m = std::min(n, kPrefix);
  std::vector<int> signs(n, 1);
  SignedFit prefix_best;
  prefix_best.residual = std::numeric_limits<double>::infinity();
  std::vector<int> best_signs = signs;
  for (std::uint32_t mask = 0; mask < (1u << (m - 1)); ++mask) {
    for (std::size_t k = 1; k < m; ++k) signs[k] = (mask >> (k - 1)) & 1u ? -1 : 1;
    const SignedFit f = signed_fit(blocks, signs, m);
    if (f.residual < prefix_best.residual) {
      prefix_best = f;
      best_signs = signs;
    }
  }
  if (!std::isfinite(prefix_best.residual)) return;

  auto base_normal = [&](std::size_t i) -> Eigen::Vector3d {
    return obs[i].tcp_pose.rotation.transpose() * prefix_best.rotation.transpose() *
           obs[i].plane.normal;
  };
  const Eigen::Vector3d ref = base_normal(0);
  for (std::size_t k = m; k < n; ++k) best_signs[k] = base_normal(k).dot(ref) < 0.0 ? -1 : 1;
  const std::vector<int> same(n, 1);
  if (best_signs == same) return;

  const SignedFit same_fit = signed_fit(blocks, same, n);
  const SignedFit mixed_fit = signed_fit(blocks, best_signs, n);
  if (mixed_fit.gap > cfg.max_rotation_gap || !(mixed_fit.residual < 0.5 * same_fit.residual))
    return;

  std::ostringstream msg;
  msg << "orientation inconsistency: views";
  for (std::size_t k = 1; k < n; ++k)
    if (best_signs[k] != 1) msg << ' ' << k;
  msg << " see the plane from the opposite side of view 0";
  throw Error(ErrorCode::kOrientationInconsistency, msg.str());
}

}  // namespace

CenteredObservations center_translations(const Observations& observations) {
  if (observations.empty()) {
    throw Error(ErrorCode::kInsufficientData, "center_translations needs at least one observation");
  }
  Eigen::Vector3d centroid = Eigen::Vector3d::Zero();
  for (const auto& o : observations) centroid += o.tcp_pose.inverse().translation;
  centroid /= static_cast<double>(observations.size());

  CenteredObservations out;
  out.centering = RigidTransform::pure_translation(centroid);
  out.observations.reserve(observations.size());
  for (const auto& o : observations) {
    out.observations.push_back({o.plane, o.tcp_pose * out.centering});
  }
  return out;
}

Eigen::MatrixXd rotation_constraint_stack(const Observations& obs) {
  const auto pairs = static_cast<Eigen::Index>(obs.size() > 0 ? obs.size() - 1 : 0);
  Eigen::MatrixXd stack(3 * pairs, 9);
  for (Eigen::Index j = 0; j < pairs; ++j) {
    const auto& a = obs[static_cast<std::size_t>(j)];
    const auto& b = obs[static_cast<std::size_t>(j) + 1];
    stack.middleRows<3>(3 * j) = kron_block(a.tcp_pose.rotation, a.plane.normal) -
                                 kron_block(b.tcp_pose.rotation, b.plane.normal);
  }
  return stack;
}

RotationEstimate solve_rotation(const CenteredObservations& centered, const ClosedFormConfig& cfg) {
  const auto& obs = centered.observations;
  require_observations(obs.size(), "rotation solve");

  const Eigen::MatrixXd stack = rotation_constraint_stack(obs);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(stack, Eigen::ComputeFullV);
  const Eigen::VectorXd s = svd.singularValues();

  RotationEstimate est;
  est.rotation_gap = (s(7) <= 1e-9 * s(0) || !(s(0) > 0.0)) ? 1.0 : s(8) / s(7);
  if (est.rotation_gap > cfg.max_rotation_gap) {
    std::ostringstream msg;
    msg << "degenerate motion: rotation nullspace is not separated (gap " << est.rotation_gap
        << " > " << cfg.max_rotation_gap << "); ";
    if (all_normals_equal(obs) && all_rotations_equal(obs)) {
      msg << "camera-frame normals and TCP orientations are identical across views "
             "(pure-translation motion)";
    } else if (all_normals_equal(obs)) {
      msg << "camera-frame normals are identical across views";
    } else {
      msg << "insufficient rotational diversity between views";
    }
    throw Error(ErrorCode::kDegenerateMotion, msg.str());
  }

  const Eigen::Matrix<double, 9, 1> null_vec = svd.matrixV().col(8);
  const Eigen::Matrix3d raw = Eigen::Map<const Eigen::Matrix3d>(null_vec.data());

  // The nullspace vector has an arbitrary sign; keep the projection whose
  // constraint residual is smaller.
  const Eigen::Matrix3d pos = project_to_so3(raw);
  const Eigen::Matrix3d neg = project_to_so3(-raw);
  est.rotation = stack_residual(stack, pos) <= stack_residual(stack, neg) ? pos : neg;
  return est;
}

TranslationEstimate solve_translation(const CenteredObservations& centered,
                                      const Eigen::Matrix3d& rotation,
                                      const ClosedFormConfig& cfg) {
  const auto& obs = centered.observations;
  require_observations(obs.size(), "translation solve");

  const auto rows = static_cast<Eigen::Index>(obs.size() - 1);
  Eigen::MatrixXd a(rows, 3);
  Eigen::VectorXd b(rows);
  for (Eigen::Index j = 0; j < rows; ++j) {
    const auto& cur = obs[static_cast<std::size_t>(j)];
    const auto& next = obs[static_cast<std::size_t>(j) + 1];
    a.row(j) = (cur.plane.normal - next.plane.normal).transpose();
    b(j) = -cur.plane.normal.dot(rotation * cur.tcp_pose.translation) +
           next.plane.normal.dot(rotation * next.tcp_pose.translation) - cur.plane.offset +
           next.plane.offset;
  }

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd s = svd.singularValues();
  if (!(s(0) > 0.0) || s(2) <= 1e-12 * s(0)) {
    throw Error(ErrorCode::kDegenerateNormals,
                "degenerate normals: camera-frame normal differences span fewer than 3 "
                "dimensions, translation is unobservable");
  }
  TranslationEstimate est;
  est.condition = s(0) / s(2);
  if (est.condition > cfg.max_translation_condition) {
    std::ostringstream msg;
    msg << "degenerate normals: translation system condition number " << est.condition
        << " exceeds " << cfg.max_translation_condition;
    throw Error(ErrorCode::kDegenerateNormals, msg.str());
  }
  est.translation = svd.solve(b);
  return est;
}

Eigen::RowVector4d mean_base_plane(const RigidTransform& X, const Observations& observations) {
  Eigen::RowVector4d sum = Eigen::RowVector4d::Zero();
  for (const auto& o : observations) sum += o.plane.row() * X.matrix() * o.tcp_pose.matrix();
  return sum / static_cast<double>(observations.size());
}

ClosedFormResult closed_form_calibrate(const Observations& observations,
                                       const ClosedFormConfig& cfg) {
  require_observations(observations.size(), "closed-form calibration");

  Observations canonical = observations;
  for (auto& o : canonical) o.plane = canonicalize(o.plane);

  check_single_side(canonical, cfg);
  const CenteredObservations centered = center_translations(canonical);
  const RotationEstimate rot = solve_rotation(centered, cfg);
  const TranslationEstimate trans = solve_translation(centered, rot.rotation, cfg);

  ClosedFormResult result;
  result.X.rotation = rot.rotation;
  result.X.translation = trans.translation;

  // X does not depend on the base-frame shift; only the base plane does.
  const Eigen::Vector3d first = (canonical.front().plane.row() * result.X.matrix() *
                                 canonical.front().tcp_pose.matrix())
                                    .head<3>()
                                    .transpose();
  for (std::size_t i = 1; i < canonical.size(); ++i) {
    const Eigen::Vector3d n = (canonical[i].plane.row() * result.X.matrix() *
                               canonical[i].tcp_pose.matrix())
                                  .head<3>()
                                  .transpose();
    if (n.dot(first) < 0.0) {
      std::ostringstream msg;
      msg << "orientation inconsistency: view " << i
          << " sees the plane from the opposite side of view 0 under the estimated X";
      throw Error(ErrorCode::kOrientationInconsistency, msg.str());
    }
  }

  result.diagnostics.rotation_gap = rot.rotation_gap;
  result.diagnostics.translation_condition = trans.condition;
  result.diagnostics.residual_rms = constraint_rms(result.X, centered.observations);
  result.plane_base = mean_base_plane(result.X, canonical);
  return result;
}

}  // namespace planehec
