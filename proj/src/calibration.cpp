#include "planehec/calibration.hpp"

namespace planehec {

CalibrationResult calibrate(const Observations& observations, const CalibrationOptions& options) {
  const ClosedFormResult cf = closed_form_calibrate(observations, options.closed_form);

  CalibrationResult result;
  result.closed_form_X = cf.X;
  result.X = cf.X;
  result.diagnostics = cf.diagnostics;
  result.plane_base = cf.plane_base;
  if (!options.run_refinement) return result;

  Observations canonical = observations;
  for (auto& o : canonical) o.plane = canonicalize(o.plane);
  const CenteredObservations centered = center_translations(canonical);
  RefineResult refined = gauss_newton_refine(cf.X, centered.observations, options.refine);
  result.X = refined.X;
  result.refine = std::move(refined.report);
  result.plane_base = mean_base_plane(result.X, canonical);
  return result;
}

}  // namespace planehec
