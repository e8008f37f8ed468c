#include "planehec/refine.hpp"

#include <Eigen/Cholesky>
#include <cmath>
#include <sstream>

namespace planehec {
namespace {

constexpr double kMaxDamping = 1e12;

}  // namespace

void RefineConfig::validate() const {
  if (max_iterations < 1 || !(step_tolerance > 0.0) || !(damping_floor >= 0.0)) {
    throw Error(ErrorCode::kInvalidArgument,
                "refine config requires max_iterations >= 1, step_tolerance > 0, "
                "damping_floor >= 0");
  }
}

Eigen::VectorXd residual_vector(const RigidTransform& X, const Observations& obs) {
  const auto pairs = static_cast<Eigen::Index>(obs.size() > 0 ? obs.size() - 1 : 0);
  Eigen::VectorXd g(4 * pairs);
  const Eigen::Matrix4d xm = X.matrix();
  for (Eigen::Index j = 0; j < pairs; ++j) {
    const auto& a = obs[static_cast<std::size_t>(j)];
    const auto& b = obs[static_cast<std::size_t>(j) + 1];
    const Eigen::RowVector4d row =
        a.plane.row() * xm * a.tcp_pose.matrix() - b.plane.row() * xm * b.tcp_pose.matrix();
    g.segment<4>(4 * j) = row.transpose();
  }
  return g;
}

Eigen::MatrixXd jacobian_matrix(const RigidTransform& X, const Observations& obs) {
  const auto pairs = static_cast<Eigen::Index>(obs.size() > 0 ? obs.size() - 1 : 0);
  Eigen::MatrixXd jac(4 * pairs, 6);
  const Matrix46d origin_term = point_action_jacobian(X, Eigen::Vector3d::Zero());

  // Row k of one side: M ((X c_k)^odot - (X 0)^odot) for the rotation columns
  // c_k of A, and M (X t)^odot for the translation column.
  auto side = [&](const Observation& o, int k) -> Eigen::Matrix<double, 1, 6> {
    const Eigen::RowVector4d m = o.plane.row();
    if (k < 3) {
      return m * (point_action_jacobian(X, o.tcp_pose.rotation.col(k)) - origin_term);
    }
    return m * point_action_jacobian(X, o.tcp_pose.translation);
  };

  for (Eigen::Index j = 0; j < pairs; ++j) {
    const auto& a = obs[static_cast<std::size_t>(j)];
    const auto& b = obs[static_cast<std::size_t>(j) + 1];
    for (int k = 0; k < 4; ++k) jac.row(4 * j + k) = side(a, k) - side(b, k);
  }
  return jac;
}

double objective(const RigidTransform& X, const Observations& obs) {
  return residual_vector(X, obs).squaredNorm();
}

RefineResult gauss_newton_refine(const RigidTransform& X0, const Observations& obs,
                                 const RefineConfig& cfg) {
  cfg.validate();
  if (obs.size() < 4) {
    std::ostringstream msg;
    msg << "refinement needs at least 4 observations, got " << obs.size();
    throw Error(ErrorCode::kInsufficientData, msg.str());
  }

  RefineResult out;
  out.X = X0;
  RefineReport& report = out.report;
  double current = objective(out.X, obs);
  report.initial_objective = current;
  report.final_objective = current;

  double lambda = cfg.damping_floor;
  for (int iter = 1; iter <= cfg.max_iterations; ++iter) {
    report.iterations = iter;
    const Eigen::VectorXd g = residual_vector(out.X, obs);
    const Eigen::MatrixXd jac = jacobian_matrix(out.X, obs);
    const Eigen::Matrix<double, 6, 6> h = jac.transpose() * jac;
    const Vector6d grad = jac.transpose() * g;
    if (!h.allFinite() || !grad.allFinite()) {
      throw OptimizationError("normal equations contain non-finite values", report);
    }
    const double scale = std::max(h.diagonal().maxCoeff(), 1e-300);

    bool stepped = false;
    while (!stepped) {
      const Eigen::Matrix<double, 6, 6> damped =
          h + lambda * Eigen::Matrix<double, 6, 6>::Identity();
      Eigen::LDLT<Eigen::Matrix<double, 6, 6>> ldlt(damped);
      Vector6d step = Vector6d::Zero();
      bool solvable = ldlt.info() == Eigen::Success && ldlt.isPositive() && ldlt.rcond() > 1e-14;
      if (solvable) {
        step = -ldlt.solve(grad);
        solvable = step.allFinite();
      }
      if (!solvable && grad.isZero(0.0)) solvable = true;  // nothing to correct

      if (solvable) {
        const double step_norm = step.norm();
        if (step_norm < cfg.step_tolerance) {
          report.step_norms.push_back(step_norm);
          report.converged = true;
          report.final_objective = current;
          return out;
        }
        const RigidTransform candidate = exp_se3(Twist::from_vector(step)) * out.X;
        const double value = objective(candidate, obs);
        if (value <= current) {
          out.X = candidate;
          current = value;
          report.step_norms.push_back(step_norm);
          lambda = cfg.damping_floor;
          stepped = true;
          continue;
        }
      }
      lambda = lambda > 0.0 ? 10.0 * lambda : std::max(1e-9 * scale, 1e-300);
      if (lambda > kMaxDamping * scale) {
        if (!solvable) {
          throw OptimizationError("normal matrix stays singular after damping escalation",
                                  report);
        }
        // Damped steps no longer decrease the objective: at a numerical minimum.
        report.step_norms.push_back(0.0);
        report.converged = true;
        report.final_objective = current;
        return out;
      }
    }
  }
  report.final_objective = current;
  return out;
}

}  // namespace planehec
