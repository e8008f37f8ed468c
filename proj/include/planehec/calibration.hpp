#pragma once

#include <optional>

#include "planehec/closed_form.hpp"
#include "planehec/refine.hpp"

namespace planehec {

struct CalibrationOptions {
  ClosedFormConfig closed_form;
  RefineConfig refine;
  bool run_refinement = true;
};

struct CalibrationResult {
  RigidTransform X;              // final estimate
  RigidTransform closed_form_X;  // initial value for the refinement
  SolveDiagnostics diagnostics;
  std::optional<RefineReport> refine;
  Eigen::RowVector4d plane_base = Eigen::RowVector4d::Zero();
};

/// Closed form, then (optionally) Gauss-Newton from the closed-form estimate.
/// Both stages run on the translation-centered observations.
CalibrationResult calibrate(const Observations& observations, const CalibrationOptions& options = {});

}  // namespace planehec
