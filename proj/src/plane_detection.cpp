#include "planehec/plane_detection.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <limits>
#include <optional>
#include <random>
#include <sstream>

#include "planehec/error.hpp"

namespace planehec {
namespace {

constexpr int kMaxResamples = 10;

std::optional<Plane> try_plane_from_three(const Eigen::Vector3d& p1, const Eigen::Vector3d& p2,
                                          const Eigen::Vector3d& p3) {
  const Eigen::Vector3d a = p2 - p1;
  const Eigen::Vector3d b = p3 - p1;
  const Eigen::Vector3d n = a.cross(b);
  const double scale = a.norm() * b.norm();
  if (!(scale > 0.0) || n.norm() <= 1e-12 * scale) return std::nullopt;
  const Eigen::Vector3d unit = n.normalized();
  // Offset from the centroid keeps all three residuals symmetric.
  const Eigen::Vector3d centroid = (p1 + p2 + p3) / 3.0;
  return canonicalize(Plane{unit, -unit.dot(centroid)});
}

struct Score {
  std::size_t count = 0;
  double sum_sq = 0.0;

  double rms() const {
    return count ? std::sqrt(sum_sq / static_cast<double>(count))
                 : std::numeric_limits<double>::infinity();
  }
};

Score score(const PointCloud& cloud, const Plane& plane, double threshold) {
  Score s;
  for (const auto& p : cloud.points) {
    const double r = eval_plane(plane, p);
    if (std::abs(r) <= threshold) {
      ++s.count;
      s.sum_sq += r * r;
    }
  }
  return s;
}

std::vector<std::size_t> select_inliers(const PointCloud& cloud, const Plane& plane,
                                        double threshold) {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    if (std::abs(eval_plane(plane, cloud.points[i])) <= threshold) idx.push_back(i);
  }
  return idx;
}

}  // namespace

void RansacConfig::validate() const {
  if (!(distance_threshold > 0.0) || max_iterations < 1 || !(min_inlier_ratio > 0.0) ||
      min_inlier_ratio > 1.0) {
    throw Error(ErrorCode::kInvalidArgument,
                "RANSAC config requires threshold > 0, max_iterations >= 1, "
                "0 < min_inlier_ratio <= 1");
  }
}

PointCloud crop_depth(const PointCloud& cloud, double near, double far) {
  if (!(near > 0.0) || !(near < far)) {
    throw Error(ErrorCode::kInvalidArgument, "crop_depth requires 0 < near < far");
  }
  PointCloud out;
  out.points.reserve(cloud.size());
  for (const auto& p : cloud.points) {
    if (p.z() >= near && p.z() <= far) out.points.push_back(p);
  }
  return out;
}

Plane plane_from_three(const Eigen::Vector3d& p1, const Eigen::Vector3d& p2,
                       const Eigen::Vector3d& p3) {
  auto plane = try_plane_from_three(p1, p2, p3);
  if (!plane) throw Error(ErrorCode::kDegenerateSample, "sample points are collinear");
  return *plane;
}

Plane refine_plane(const PointCloud& cloud, const std::vector<std::size_t>& indices) {
  if (indices.size() < 3) {
    throw Error(ErrorCode::kDegenerateInput, "plane refinement needs at least 3 points");
  }
  Eigen::Vector3d centroid = Eigen::Vector3d::Zero();
  for (auto i : indices) centroid += cloud.points.at(i);
  centroid /= static_cast<double>(indices.size());

  Eigen::Matrix3d scatter = Eigen::Matrix3d::Zero();
  for (auto i : indices) {
    const Eigen::Vector3d d = cloud.points[i] - centroid;
    scatter.noalias() += d * d.transpose();
  }
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(scatter);
  const Eigen::Vector3d ev = eig.eigenvalues();  // ascending
  if (!(ev(2) > 0.0) || ev(1) <= 1e-12 * ev(2)) {
    throw Error(ErrorCode::kDegenerateInput, "inlier scatter is rank deficient (collinear points)");
  }
  const Eigen::Vector3d normal = eig.eigenvectors().col(0);
  return canonicalize(Plane{normal, -normal.dot(centroid)});
}

PlaneFit ransac_plane(const PointCloud& cloud, const RansacConfig& cfg) {
  cfg.validate();
  const std::size_t n = cloud.size();
  if (n < 3) {
    throw Error(ErrorCode::kDetectionFailure, "plane detection needs at least 3 points");
  }

  std::mt19937_64 rng(cfg.seed);
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);

  std::optional<Plane> best;
  Score best_score;
  for (int it = 0; it < cfg.max_iterations; ++it) {
    std::optional<Plane> candidate;
    for (int attempt = 0; attempt < kMaxResamples && !candidate; ++attempt) {
      const std::size_t a = pick(rng);
      const std::size_t b = pick(rng);
      const std::size_t c = pick(rng);
      if (a == b || b == c || a == c) continue;
      candidate = try_plane_from_three(cloud.points[a], cloud.points[b], cloud.points[c]);
    }
    if (!candidate) continue;
    const Score s = score(cloud, *candidate, cfg.distance_threshold);
    if (s.count > best_score.count ||
        (s.count == best_score.count && s.count > 0 && s.rms() < best_score.rms())) {
      best = candidate;
      best_score = s;
    }
  }

  const double needed = cfg.min_inlier_ratio * static_cast<double>(n);
  auto fail = [&](std::size_t got) {
    std::ostringstream msg;
    msg << "no plane reached the inlier ratio " << cfg.min_inlier_ratio << " (best " << got
        << " of " << n << " points within " << cfg.distance_threshold << " m after "
        << cfg.max_iterations << " iterations)";
    return Error(ErrorCode::kDetectionFailure, msg.str());
  };
  if (!best || static_cast<double>(best_score.count) < needed) throw fail(best_score.count);

  // Refit on the candidate's inliers, re-select against the refit, refit once
  // more, then drop anything the final plane no longer accepts.
  PlaneFit fit;
  try {
    auto inliers = select_inliers(cloud, *best, cfg.distance_threshold);
    Plane plane = refine_plane(cloud, inliers);
    inliers = select_inliers(cloud, plane, cfg.distance_threshold);
    plane = refine_plane(cloud, inliers);
    fit.inliers = select_inliers(cloud, plane, cfg.distance_threshold);
    fit.plane = plane;
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kDegenerateInput) throw;
    throw Error(ErrorCode::kDetectionFailure, std::string("plane refinement failed: ") + e.what());
  }
  if (static_cast<double>(fit.inliers.size()) < needed) throw fail(fit.inliers.size());
  return fit;
}

}  // namespace planehec

namespace planehec {

PlaneFit detect_plane(const PointCloud& cloud, const DetectionOptions& options) {
  const PointCloud cropped = crop_depth(cloud, options.near, options.far);
  PlaneFit fit = ransac_plane(cropped, options.ransac);
  // Inlier indices refer to the cropped cloud; map them back.
  std::vector<std::size_t> original;
  original.reserve(cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const double z = cloud.points[i].z();
    if (z >= options.near && z <= options.far) original.push_back(i);
  }
  for (auto& idx : fit.inliers) idx = original[idx];
  return fit;
}

}  // namespace planehec
