#pragma once

#include <cstdint>
#include <vector>

#include "planehec/calibration.hpp"
#include "planehec/plane_detection.hpp"
#include "planehec/simulator.hpp"

namespace planehec {

/// Scatter of repeated calibration estimates about their center. Angles in
/// degrees, lengths in millimeters.
struct TrialStats {
  double e_r = 0.0;
  double e_t = 0.0;
  double e_xy = 0.0;
  double e_z = 0.0;
  std::size_t trials = 0;       // estimates that entered the statistics
  std::size_t sample_size = 0;  // views per calibration
  std::size_t excluded = 0;     // trials dropped because the solver raised
  double mean_iterations = 0.0;  // refinement only
  double iteration_std = 0.0;
};

struct ReconstructionStats {
  double rotation_error = 0.0;  // degrees
  double distance_error = 0.0;  // millimeters
  std::size_t sample_size = 0;
};

/// Rotation center is the chordal mean; e_r is the RMS geodesic angle to it.
/// Translation deviations are taken from the arithmetic mean, component-wise
/// in the frame the translations are expressed in.
TrialStats subsample_scatter(const std::vector<RigidTransform>& estimates);

struct Table1Row {
  std::size_t sample_size = 0;
  TrialStats closed_form;
  TrialStats iterative;
};

/// For each size draw `trials` random subsets (random order) of the pool and
/// calibrate them with and without refinement.
std::vector<Table1Row> table1_protocol(const Observations& pool,
                                       const std::vector<std::size_t>& sample_sizes,
                                       std::size_t trials, std::uint64_t seed,
                                       const CalibrationOptions& options = {});

/// Maps each holdout plane into the base frame through X and its pose and
/// reports RMS pairwise normal angle and offset difference.
ReconstructionStats plane_reconstruction_error(const RigidTransform& X,
                                               const Observations& holdout);

struct ReconstructionTrial {
  std::vector<std::size_t> fit_indices;
  std::vector<std::size_t> holdout_indices;
  ReconstructionStats stats;
};

struct ReconstructionRow {
  std::size_t sample_size = 0;
  ReconstructionStats pooled;  // RMS over successful trials
  std::size_t trials = 0;
  std::size_t excluded = 0;
  std::vector<ReconstructionTrial> details;
};

/// Fit X on a random subset, reconstruct with the remaining views (at most
/// max_holdout of them).
std::vector<ReconstructionRow> reconstruction_protocol(const Observations& pool,
                                                       const std::vector<std::size_t>& sample_sizes,
                                                       std::size_t trials, std::uint64_t seed,
                                                       const CalibrationOptions& options = {},
                                                       std::size_t max_holdout = 100);

struct NoiseCell {
  double rotation_sigma = 0.0;     // radians
  double translation_sigma = 0.0;  // meters
  TrialStats closed_form;
  TrialStats iterative;
};

/// Every (rotation_sigma, translation_sigma) pair of the grid. Trial t uses
/// the same view subset and the same unit perturbation draws in every cell.
std::vector<NoiseCell> noise_sweep(const Observations& pool,
                                   const std::vector<double>& rotation_sigmas,
                                   const std::vector<double>& translation_sigmas,
                                   std::size_t trials, std::uint64_t seed,
                                   std::size_t batch_size = 15,
                                   const CalibrationOptions& options = {});

/// Generates the scene, detects its planes and sweeps the resulting pool.
std::vector<NoiseCell> noise_sweep(const SceneConfig& base_scene,
                                   const std::vector<double>& rotation_sigmas,
                                   const std::vector<double>& translation_sigmas,
                                   std::size_t trials, std::uint64_t seed,
                                   std::size_t batch_size = 15,
                                   const CalibrationOptions& options = {});

struct RuntimeReport {
  double mean_seconds = 0.0;
  double mean_iterations = 0.0;
  double iteration_std = 0.0;
  std::size_t repetitions = 0;
};

/// Wall-clock time of closed form + refinement only.
RuntimeReport runtime_report(const Observations& observations, std::size_t repetitions,
                             const CalibrationOptions& options = {});

/// Camera-frame planes detected in every view of a synthetic dataset. View i
/// runs RANSAC with derive_seed(options.ransac.seed, i); the detected plane is
/// then perturbed with the dataset's plane-level noise channels.
Observations observation_pool(const SyntheticDataset& data, const DetectionOptions& options);

/// Random subset of `count` distinct indices in random order.
std::vector<std::size_t> random_subset(std::size_t pool_size, std::size_t count,
                                       std::uint64_t seed);

}  // namespace planehec
