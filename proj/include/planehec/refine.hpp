#pragma once

#include <Eigen/Core>
#include <vector>

#include "planehec/error.hpp"
#include "planehec/plane.hpp"
#include "planehec/se3.hpp"

namespace planehec {

struct RefineConfig {
  int max_iterations = 100;
  double step_tolerance = 1e-10;  // on |delta xi|
  double damping_floor = 0.0;

  void validate() const;
};

struct RefineReport {
  int iterations = 0;
  double initial_objective = 0.0;
  double final_objective = 0.0;
  std::vector<double> step_norms;  // one per iteration
  bool converged = false;
};

struct RefineResult {
  RigidTransform X;
  RefineReport report;
};

class OptimizationError : public Error {
 public:
  OptimizationError(const std::string& message, RefineReport report)
      : Error(ErrorCode::kOptimizationFailure, message), report_(std::move(report)) {}

  const RefineReport& report() const noexcept { return report_; }

 private:
  RefineReport report_;
};

/// Stacked consecutive-pair residuals: entry 4j + k is column k of
/// M_j X A_j - M_{j+1} X A_{j+1}.
Eigen::VectorXd residual_vector(const RigidTransform& X, const Observations& observations);

/// Derivative of residual_vector under a left perturbation exp(xi) * X, with
/// columns ordered (rho | phi).
Eigen::MatrixXd jacobian_matrix(const RigidTransform& X, const Observations& observations);

double objective(const RigidTransform& X, const Observations& observations);

/// Gauss-Newton on SE(3) with left updates X <- exp(dxi) X. A step that would
/// raise the objective is rejected and retried with tenfold damping, so the
/// accepted objective sequence never increases.
RefineResult gauss_newton_refine(const RigidTransform& X0, const Observations& observations,
                                 const RefineConfig& cfg = {});

}  // namespace planehec
