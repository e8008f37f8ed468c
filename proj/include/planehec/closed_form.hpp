#pragma once

#include <Eigen/Core>

#include "planehec/plane.hpp"
#include "planehec/se3.hpp"

namespace planehec {

/// Observations re-expressed in a base frame whose origin sits at the centroid
/// of the TCP positions. `centering` is the pure translation A_average with
/// centered pose = original pose * A_average.
struct CenteredObservations {
  Observations observations;
  RigidTransform centering;
};

struct SolveDiagnostics {
  double rotation_gap = 0.0;           // smallest / second-smallest singular value
  double translation_condition = 0.0;  // cond() of the normal-difference matrix
  double residual_rms = 0.0;           // RMS of consecutive plane-constraint differences
};

struct ClosedFormConfig {
  double max_rotation_gap = 0.5;
  double max_translation_condition = 1e8;
};

struct RotationEstimate {
  Eigen::Matrix3d rotation;
  double rotation_gap = 0.0;
};

struct TranslationEstimate {
  Eigen::Vector3d translation;
  double condition = 0.0;
};

struct ClosedFormResult {
  RigidTransform X;  // TCP frame -> camera frame
  SolveDiagnostics diagnostics;
  Eigen::RowVector4d plane_base;  // mean of M_i X A_i over the input poses
};

CenteredObservations center_translations(const Observations& observations);

/// Kronecker-stacked homogeneous system for the rotation, one 3x9 block per
/// consecutive pair, acting on the column-major vec of R_X.
Eigen::MatrixXd rotation_constraint_stack(const Observations& observations);

RotationEstimate solve_rotation(const CenteredObservations& obs, const ClosedFormConfig& cfg = {});

TranslationEstimate solve_translation(const CenteredObservations& obs,
                                      const Eigen::Matrix3d& rotation,
                                      const ClosedFormConfig& cfg = {});

/// center -> rotation -> translation -> orientation check. Requires >= 4
/// observations.
ClosedFormResult closed_form_calibrate(const Observations& observations,
                                       const ClosedFormConfig& cfg = {});

/// Mean of the base-frame plane rows M_i X A_i.
Eigen::RowVector4d mean_base_plane(const RigidTransform& X, const Observations& observations);

}  // namespace planehec
