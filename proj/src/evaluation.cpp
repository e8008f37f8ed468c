#include "planehec/evaluation.hpp"

#include <chrono>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>
#include <sstream>
#include <string>

#include "planehec/error.hpp"

namespace planehec {
namespace {

constexpr double kRadToDeg = 180.0 / std::numbers::pi;

Observations select(const Observations& pool, const std::vector<std::size_t>& idx) {
  Observations out;
  out.reserve(idx.size());
  for (auto i : idx) out.push_back(pool[i]);
  return out;
}

void fill_iterations(TrialStats& stats, const std::vector<int>& iterations) {
  if (iterations.empty()) return;
  const double n = static_cast<double>(iterations.size());
  const double mean = std::accumulate(iterations.begin(), iterations.end(), 0.0) / n;
  double var = 0.0;
  for (int it : iterations) var += (it - mean) * (it - mean);
  stats.mean_iterations = mean;
  stats.iteration_std = std::sqrt(var / n);
}

TrialStats scatter_or_empty(const std::vector<RigidTransform>& estimates) {
  if (estimates.size() < 2) return {};
  return subsample_scatter(estimates);
}

void check_protocol(const Observations& pool, std::size_t max_size, std::size_t trials) {
  if (trials < 2) throw Error(ErrorCode::kInvalidArgument, "protocol needs at least 2 trials");
  if (pool.size() < max_size) {
    std::ostringstream msg;
    msg << "pool of " << pool.size() << " views is smaller than sample size " << max_size;
    throw Error(ErrorCode::kInvalidArgument, msg.str());
  }
}

}  // namespace

TrialStats subsample_scatter(const std::vector<RigidTransform>& estimates) {
  if (estimates.size() < 2) {
    throw Error(ErrorCode::kInvalidArgument, "scatter needs at least 2 estimates");
  }
  const double n = static_cast<double>(estimates.size());
  Eigen::Matrix3d rot_sum = Eigen::Matrix3d::Zero();
  Eigen::Vector3d t_mean = Eigen::Vector3d::Zero();
  for (const auto& e : estimates) {
    rot_sum += e.rotation;
    t_mean += e.translation;
  }
  t_mean /= n;
  const Eigen::Matrix3d center = project_to_so3(rot_sum / n);

  double ang = 0.0, t = 0.0, xy = 0.0, z = 0.0;
  for (const auto& e : estimates) {
    const double a = rotation_angle_between(center, e.rotation);
    const Eigen::Vector3d d = e.translation - t_mean;
    ang += a * a;
    t += d.squaredNorm();
    xy += d.head<2>().squaredNorm();
    z += d.z() * d.z();
  }
  TrialStats s;
  s.e_r = std::sqrt(ang / n) * kRadToDeg;
  s.e_t = std::sqrt(t / n) * 1e3;
  s.e_xy = std::sqrt(xy / n) * 1e3;
  s.e_z = std::sqrt(z / n) * 1e3;
  s.trials = estimates.size();
  return s;
}

std::vector<std::size_t> random_subset(std::size_t pool_size, std::size_t count,
                                       std::uint64_t seed) {
  if (count > pool_size) {
    throw Error(ErrorCode::kInvalidArgument, "random_subset: requested " + std::to_string(count) +
                                                 " of " + std::to_string(pool_size) + " views");
  }
  std::vector<std::size_t> idx(pool_size);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  for (std::size_t i = 0; i < count && i + 1 < pool_size; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, pool_size - 1);
    std::swap(idx[i], idx[pick(rng)]);
  }
  idx.resize(count);
  return idx;
}

std::vector<Table1Row> table1_protocol(const Observations& pool,
                                       const std::vector<std::size_t>& sample_sizes,
                                       std::size_t trials, std::uint64_t seed,
                                       const CalibrationOptions& options) {
  std::size_t max_size = 0;
  for (auto s : sample_sizes) max_size = std::max(max_size, s);
  check_protocol(pool, max_size, trials);

  std::vector<Table1Row> rows;
  for (std::size_t size_index = 0; size_index < sample_sizes.size(); ++size_index) {
    const std::size_t size = sample_sizes[size_index];
    std::vector<RigidTransform> closed, refined;
    std::vector<int> iterations;
    std::size_t closed_failed = 0, refined_failed = 0;
    for (std::size_t trial = 0; trial < trials; ++trial) {
      const auto idx = random_subset(pool.size(), size,
                                     derive_seed(seed, size_index * 1000003 + trial));
      const Observations subset = select(pool, idx);
      try {
        const CalibrationResult r = calibrate(subset, options);
        closed.push_back(r.closed_form_X);
        refined.push_back(r.X);
        if (r.refine) iterations.push_back(r.refine->iterations);
      } catch (const OptimizationError&) {
        CalibrationOptions cf_only = options;
        cf_only.run_refinement = false;
        closed.push_back(calibrate(subset, cf_only).X);
        ++refined_failed;
      } catch (const Error&) {
        ++closed_failed;
        ++refined_failed;
      }
    }
    Table1Row row;
    row.sample_size = size;
    row.closed_form = scatter_or_empty(closed);
    row.closed_form.sample_size = size;
    row.closed_form.excluded = closed_failed;
    row.iterative = scatter_or_empty(refined);
    row.iterative.sample_size = size;
    row.iterative.excluded = refined_failed;
    fill_iterations(row.iterative, iterations);
    rows.push_back(row);
  }
  return rows;
}

ReconstructionStats plane_reconstruction_error(const RigidTransform& X,
                                               const Observations& holdout) {
  if (holdout.size() < 2) {
    throw Error(ErrorCode::kInvalidArgument, "reconstruction needs at least 2 holdout views");
  }
  std::vector<Plane> base;
  base.reserve(holdout.size());
  for (const auto& o : holdout) base.push_back(compose_plane(compose_plane(o.plane, X), o.tcp_pose));

  double ang = 0.0, dist = 0.0;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < base.size(); ++i) {
    for (std::size_t j = i + 1; j < base.size(); ++j) {
      const double a = normal_angle(base[i], base[j]);
      const double d = std::abs(base[i].offset) - std::abs(base[j].offset);
      ang += a * a;
      dist += d * d;
      ++pairs;
    }
  }
  ReconstructionStats s;
  s.rotation_error = std::sqrt(ang / static_cast<double>(pairs)) * kRadToDeg;
  s.distance_error = std::sqrt(dist / static_cast<double>(pairs)) * 1e3;
  s.sample_size = holdout.size();
  return s;
}

std::vector<ReconstructionRow> reconstruction_protocol(const Observations& pool,
                                                       const std::vector<std::size_t>& sample_sizes,
                                                       std::size_t trials, std::uint64_t seed,
                                                       const CalibrationOptions& options,
                                                       std::size_t max_holdout) {
  std::size_t max_size = 0;
  for (auto s : sample_sizes) max_size = std::max(max_size, s);
  check_protocol(pool, max_size + 2, trials);

  std::vector<ReconstructionRow> rows;
  for (std::size_t size_index = 0; size_index < sample_sizes.size(); ++size_index) {
    const std::size_t size = sample_sizes[size_index];
    ReconstructionRow row;
    row.sample_size = size;
    for (std::size_t trial = 0; trial < trials; ++trial) {
      const auto order =
          random_subset(pool.size(), pool.size(), derive_seed(seed, size_index * 1000003 + trial));
      ReconstructionTrial detail;
      detail.fit_indices.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(size));
      const std::size_t holdout_count = std::min(max_holdout, pool.size() - size);
      detail.holdout_indices.assign(
          order.begin() + static_cast<std::ptrdiff_t>(size),
          order.begin() + static_cast<std::ptrdiff_t>(size + holdout_count));
      try {
        const CalibrationResult r = calibrate(select(pool, detail.fit_indices), options);
        detail.stats = plane_reconstruction_error(r.X, select(pool, detail.holdout_indices));
      } catch (const Error&) {
        ++row.excluded;
        continue;
      }
      row.pooled.rotation_error += detail.stats.rotation_error * detail.stats.rotation_error;
      row.pooled.distance_error += detail.stats.distance_error * detail.stats.distance_error;
      ++row.trials;
      row.details.push_back(std::move(detail));
    }
    if (row.trials > 0) {
      row.pooled.rotation_error = std::sqrt(row.pooled.rotation_error / static_cast<double>(row.trials));
      row.pooled.distance_error = std::sqrt(row.pooled.distance_error / static_cast<double>(row.trials));
    }
    row.pooled.sample_size = size;
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<NoiseCell> noise_sweep(const Observations& pool,
                                   const std::vector<double>& rotation_sigmas,
                                   const std::vector<double>& translation_sigmas,
                                   std::size_t trials, std::uint64_t seed,
                                   std::size_t batch_size, const CalibrationOptions& options) {
  check_protocol(pool, batch_size, trials);
  for (double s : rotation_sigmas)
    if (!(s >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "rotation sigmas must be >= 0");
  for (double s : translation_sigmas)
    if (!(s >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "translation sigmas must be >= 0");

  std::vector<std::vector<std::size_t>> subsets;
  subsets.reserve(trials);
  for (std::size_t t = 0; t < trials; ++t) {
    subsets.push_back(random_subset(pool.size(), batch_size, derive_seed(seed, t)));
  }

  std::vector<NoiseCell> cells;
  for (double rot : rotation_sigmas) {
    for (double trans : translation_sigmas) {
      NoiseSpec spec = NoiseSpec::none();
      spec.plane_rotation_sigma = rot;
      spec.plane_translation_sigma = trans;

      std::vector<RigidTransform> closed, refined;
      std::vector<int> iterations;
      std::size_t closed_failed = 0, refined_failed = 0;
      for (std::size_t t = 0; t < trials; ++t) {
        Observations batch = select(pool, subsets[t]);
        for (std::size_t v = 0; v < batch.size(); ++v) {
          const std::uint64_t view_seed = derive_seed(derive_seed(seed, 1u << 20), t * 4096 + v);
          batch[v].plane = perturb_plane(batch[v].plane, spec, view_seed);
        }
        try {
          const CalibrationResult r = calibrate(batch, options);
          closed.push_back(r.closed_form_X);
          refined.push_back(r.X);
          if (r.refine) iterations.push_back(r.refine->iterations);
        } catch (const OptimizationError&) {
          CalibrationOptions cf_only = options;
          cf_only.run_refinement = false;
          closed.push_back(calibrate(batch, cf_only).X);
          ++refined_failed;
        } catch (const Error&) {
          ++closed_failed;
          ++refined_failed;
        }
      }
      NoiseCell cell;
      cell.rotation_sigma = rot;
      cell.translation_sigma = trans;
      cell.closed_form = scatter_or_empty(closed);
      cell.closed_form.sample_size = batch_size;
      cell.closed_form.excluded = closed_failed;
      cell.iterative = scatter_or_empty(refined);
      cell.iterative.sample_size = batch_size;
      cell.iterative.excluded = refined_failed;
      fill_iterations(cell.iterative, iterations);
      cells.push_back(cell);
    }
  }
  return cells;
}

std::vector<NoiseCell> noise_sweep(const SceneConfig& base_scene,
                                   const std::vector<double>& rotation_sigmas,
                                   const std::vector<double>& translation_sigmas,
                                   std::size_t trials, std::uint64_t seed, std::size_t batch_size,
                                   const CalibrationOptions& options) {
  const SyntheticDataset data = generate_scene(base_scene);
  DetectionOptions detection;
  detection.near = base_scene.near;
  detection.far = base_scene.far;
  detection.ransac.seed = base_scene.seed;
  return noise_sweep(observation_pool(data, detection), rotation_sigmas, translation_sigmas,
                     trials, seed, batch_size, options);
}

RuntimeReport runtime_report(const Observations& observations, std::size_t repetitions,
                             const CalibrationOptions& options) {
  if (repetitions < 1) throw Error(ErrorCode::kInvalidArgument, "repetitions must be >= 1");
  RuntimeReport report;
  report.repetitions = repetitions;
  std::vector<int> iterations;
  double total = 0.0;
  for (std::size_t r = 0; r < repetitions; ++r) {
    const auto start = std::chrono::steady_clock::now();
    const CalibrationResult result = calibrate(observations, options);
    const auto stop = std::chrono::steady_clock::now();
    total += std::chrono::duration<double>(stop - start).count();
    iterations.push_back(result.refine ? result.refine->iterations : 0);
  }
  report.mean_seconds = total / static_cast<double>(repetitions);
  TrialStats tmp;
  fill_iterations(tmp, iterations);
  report.mean_iterations = tmp.mean_iterations;
  report.iteration_std = tmp.iteration_std;
  return report;
}

Observations observation_pool(const SyntheticDataset& data, const DetectionOptions& options) {
  Observations pool;
  pool.reserve(data.views.size());
  for (std::size_t i = 0; i < data.views.size(); ++i) {
    DetectionOptions view_options = options;
    view_options.ransac.seed = derive_seed(options.ransac.seed, i);
    const PlaneFit fit = detect_plane(data.views[i].cloud, view_options);
    const Plane plane = perturb_plane(fit.plane, data.noise, derive_seed(data.plane_noise_seed, i));
    pool.push_back({plane, data.views[i].tcp_pose});
  }
  return pool;
}

}  // namespace planehec
