#include <gtest/gtest.h>

#include <numbers>

#include "planehec/calibration.hpp"
#include "planehec/error.hpp"
#include "planehec/refine.hpp"
#include "planehec/simulator.hpp"
#include "test_util.hpp"

namespace planehec {
namespace {

using testing::Gen;

constexpr double kDeg = std::numbers::pi / 180.0;

SyntheticDataset scene(std::uint64_t seed, int views) {
  SceneConfig cfg;
  cfg.seed = seed;
  cfg.num_views = views;
  cfg.noise = NoiseSpec::none();
  cfg.points_per_view = 10;
  return generate_scene(cfg);
}

Observations noisy(const SyntheticDataset& d, std::uint64_t seed) {
  Observations obs = d.truth_observations();
  for (std::size_t i = 0; i < obs.size(); ++i) {
    obs[i].plane = perturb_plane(obs[i].plane, NoiseSpec::calibrated(), derive_seed(seed, i));
  }
  return obs;
}

TEST(Residual, IdenticalObservationsGiveZero) {
  Gen g(51);
  const Observation o{g.plane(), g.transform()};
  const Observations obs{o, o, o};
  EXPECT_TRUE(residual_vector(g.transform(), obs).isZero(0.0));
  EXPECT_TRUE(jacobian_matrix(g.transform(), obs).isZero(0.0));
  EXPECT_EQ(objective(g.transform(), obs), 0.0);
}

TEST(Residual, MatchesNaiveRowProducts) {
  Gen g(52);
  for (int trial = 0; trial < 20; ++trial) {
    Observations obs;
    for (int i = 0; i < 5; ++i) obs.push_back({g.plane(), g.transform()});
    const RigidTransform X = g.transform();
    const Eigen::VectorXd r = residual_vector(X, obs);
    ASSERT_EQ(r.size(), 16);
    for (std::size_t j = 0; j + 1 < obs.size(); ++j) {
      const Eigen::RowVector4d naive = obs[j].plane.row() * X.matrix() * obs[j].tcp_pose.matrix() -
                                       obs[j + 1].plane.row() * X.matrix() * obs[j + 1].tcp_pose.matrix();
      for (int k = 0; k < 4; ++k) EXPECT_NEAR(r(4 * j + k), naive(k), 1e-13);
    }
    EXPECT_NEAR(objective(X, obs), r.squaredNorm(), 1e-13);
  }
}

TEST(Residual, ZeroAtTruthOnNoiselessData) {
  const SyntheticDataset d = scene(53, 12);
  EXPECT_LE(residual_vector(d.truth_X, d.truth_observations()).norm(), 1e-12);
  const Observations n = noisy(d, 1);
  EXPECT_GT(objective(d.truth_X, n), 0.0);
}

TEST(Jacobian, ShapeForTwoViews) {
  Gen g(54);
  const Observations obs{{g.plane(), g.transform()}, {g.plane(), g.transform()}};
  const Eigen::MatrixXd j = jacobian_matrix(g.transform(), obs);
  EXPECT_EQ(j.rows(), 4);
  EXPECT_EQ(j.cols(), 6);
}

TEST(Jacobian, MatchesCentralDifferences) {
  Gen g(55);
  const double h = 1e-6;
  for (int trial = 0; trial < 100; ++trial) {
    Observations obs;
    for (int i = 0; i < 2 + trial % 4; ++i) obs.push_back({g.plane(), g.transform()});
    const RigidTransform X = g.transform();
    const Eigen::MatrixXd j = jacobian_matrix(X, obs);
    for (int k = 0; k < 6; ++k) {
      Vector6d e = Vector6d::Zero();
      e(k) = h;
      const Eigen::VectorXd fd = (residual_vector(exp_se3(Twist::from_vector(e)) * X, obs) -
                                  residual_vector(exp_se3(Twist::from_vector(-e)) * X, obs)) /
                                 (2 * h);
      EXPECT_LE((fd - j.col(k)).norm(), 1e-5 * std::max(1.0, j.col(k).norm())) << trial << "/" << k;
    }
  }
}

TEST(GaussNewton, StationaryAtTruth) {
  const SyntheticDataset d = scene(56, 10);
  const RefineResult r = gauss_newton_refine(d.truth_X, d.truth_observations());
  EXPECT_LE(r.report.iterations, 1);
  EXPECT_TRUE(r.report.converged);
  EXPECT_LE((r.X.matrix() - d.truth_X.matrix()).norm(), 1e-12);
}

TEST(GaussNewton, BasinOfAttraction) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const SyntheticDataset d = scene(300 + seed, 10);
    Gen g(seed);
    Twist kick;
    kick.phi = g.unit() * 5.0 * kDeg;
    kick.rho = g.unit() * 0.05;
    const RefineResult r = gauss_newton_refine(exp_se3(kick) * d.truth_X, d.truth_observations());
    EXPECT_TRUE(r.report.converged);
    EXPECT_LE(r.report.iterations, 15);
    EXPECT_LE(rotation_angle_between(r.X.rotation, d.truth_X.rotation), 1e-8);
    EXPECT_LE((r.X.translation - d.truth_X.translation).norm(), 1e-8);
    const Eigen::VectorXd res = residual_vector(r.X, d.truth_observations());
    const Eigen::MatrixXd jac = jacobian_matrix(r.X, d.truth_observations());
    EXPECT_LE((jac.transpose() * res).norm(), 1e-6 * (1.0 + res.norm()));
  }
}

TEST(GaussNewton, MonotoneAndOnManifold) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const SyntheticDataset d = scene(400 + seed, 15);
    const Observations obs = noisy(d, seed);
    Gen g(seed);
    Twist kick;
    kick.phi = g.unit() * 3.0 * kDeg;
    kick.rho = g.unit() * 0.03;
    RigidTransform X = exp_se3(kick) * d.truth_X;
    double previous = objective(X, obs);
    // One accepted step at a time; each call re-enters from the last iterate.
    for (int step = 0; step < 8; ++step) {
      RefineConfig one;
      one.max_iterations = 1;
      const RefineResult r = gauss_newton_refine(X, obs, one);
      EXPECT_LE(r.report.final_objective, r.report.initial_objective);
      EXPECT_LE(r.report.final_objective, previous * (1 + 1e-12));
      EXPECT_TRUE(is_rotation(r.X.rotation));
      EXPECT_EQ(r.report.step_norms.size(), static_cast<std::size_t>(r.report.iterations));
      previous = r.report.final_objective;
      X = r.X;
    }
  }
}

TEST(GaussNewton, ImprovesClosedFormOnAverage) {
  double cf_r = 0, cf_t = 0, gn_r = 0, gn_t = 0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const SyntheticDataset d = scene(500 + seed, 15);
    const CalibrationResult r = calibrate(noisy(d, seed));
    ASSERT_TRUE(r.refine.has_value());
    EXPECT_LE(r.refine->final_objective, r.refine->initial_objective);
    cf_r += rotation_angle_between(r.closed_form_X.rotation, d.truth_X.rotation);
    cf_t += (r.closed_form_X.translation - d.truth_X.translation).norm();
    gn_r += rotation_angle_between(r.X.rotation, d.truth_X.rotation);
    gn_t += (r.X.translation - d.truth_X.translation).norm();
  }
  EXPECT_LE(gn_r, cf_r);
  EXPECT_LE(gn_t, cf_t);
}

TEST(GaussNewton, Preconditions) {
  const SyntheticDataset d = scene(57, 6);
  const Observations obs = d.truth_observations();
  EXPECT_THROW(gauss_newton_refine(d.truth_X, Observations(obs.begin(), obs.begin() + 3)), Error);
  RefineConfig bad;
  bad.max_iterations = 0;
  EXPECT_THROW(gauss_newton_refine(d.truth_X, obs, bad), Error);
  bad = RefineConfig{};
  bad.step_tolerance = 0.0;
  EXPECT_THROW(gauss_newton_refine(d.truth_X, obs, bad), Error);
}

TEST(GaussNewton, SingularSystemRaisesWithReport) {
  // Identical observations: J is zero and no damping makes the step useful.
  Gen g(58);
  const Observation o{g.plane(), g.transform()};
  const Observations obs(5, o);
  try {
    gauss_newton_refine(g.transform(), obs);
  } catch (const OptimizationError& e) {
    EXPECT_EQ(e.code(), ErrorCode::kOptimizationFailure);
    EXPECT_GE(e.report().final_objective, 0.0);
    return;
  }
  SUCCEED() << "zero residual is already optimal";
}

TEST(Calibrate, RefinementCanBeDisabled) {
  const SyntheticDataset d = scene(59, 10);
  CalibrationOptions opts;
  opts.run_refinement = false;
  const CalibrationResult r = calibrate(d.truth_observations(), opts);
  EXPECT_FALSE(r.refine.has_value());
  EXPECT_EQ(r.X.matrix(), r.closed_form_X.matrix());
  EXPECT_LE(rotation_angle_between(r.X.rotation, d.truth_X.rotation), 1e-8);
}

}  // namespace
}  // namespace planehec
