#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <vector>

#include "planehec/plane.hpp"

namespace planehec {

/// Unordered camera-frame points in meters.
struct PointCloud {
  std::vector<Eigen::Vector3d> points;

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
};

struct RansacConfig {
  double distance_threshold = 0.005;  // meters
  int max_iterations = 200;
  double min_inlier_ratio = 0.6;
  std::uint64_t seed = 0;

  void validate() const;
};

struct PlaneFit {
  Plane plane;
  std::vector<std::size_t> inliers;  // ascending indices into the cloud
};

/// Keeps points with near <= z <= far.
PointCloud crop_depth(const PointCloud& cloud, double near, double far);

/// Canonical plane through three points; throws Error(kDegenerateSample) when
/// they are collinear or coincident.
Plane plane_from_three(const Eigen::Vector3d& p1, const Eigen::Vector3d& p2,
                       const Eigen::Vector3d& p3);

/// Total-least-squares plane over the selected points. Throws
/// Error(kDegenerateInput) when the selection is collinear or has < 3 points.
Plane refine_plane(const PointCloud& cloud, const std::vector<std::size_t>& indices);

/// Dominant plane by RANSAC followed by least-squares refinement over the
/// inliers. Deterministic in (cloud, cfg). Throws Error(kDetectionFailure)
/// when no candidate reaches cfg.min_inlier_ratio.
PlaneFit ransac_plane(const PointCloud& cloud, const RansacConfig& cfg);

}  // namespace planehec

namespace planehec {

/// Depth crop followed by RANSAC, the per-view detection step of the pipeline.
struct DetectionOptions {
  RansacConfig ransac;
  double near = 0.3;
  double far = 0.8;
};

PlaneFit detect_plane(const PointCloud& cloud, const DetectionOptions& options);

}  // namespace planehec
