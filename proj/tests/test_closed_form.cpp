#include <gtest/gtest.h>

#include <algorithm>
#include <functional>
#include <numbers>
#include <unsupported/Eigen/KroneckerProduct>

#include "planehec/closed_form.hpp"
#include "planehec/error.hpp"
#include "planehec/simulator.hpp"
#include "test_util.hpp"

namespace planehec {
namespace {

using testing::Gen;

Observations noiseless(std::uint64_t seed, int views, double diversity_deg = 30.0) {
  SceneConfig cfg;
  cfg.seed = seed;
  cfg.num_views = views;
  cfg.rotation_diversity = diversity_deg * std::numbers::pi / 180.0;
  cfg.noise = NoiseSpec::none();
  cfg.points_per_view = 10;
  return generate_scene(cfg).truth_observations();
}

SyntheticDataset noiseless_scene(std::uint64_t seed, int views) {
  SceneConfig cfg;
  cfg.seed = seed;
  cfg.num_views = views;
  cfg.noise = NoiseSpec::none();
  cfg.points_per_view = 10;
  return generate_scene(cfg);
}

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error raised";
  return ErrorCode::kInvalidArgument;
}

Eigen::Vector3d tcp_position(const RigidTransform& a) { return a.inverse().translation; }

TEST(CenterTranslations, Examples) {
  Gen g(31);
  const RigidTransform a = g.transform();
  const CenteredObservations one = center_translations({{Plane{}, a}});
  EXPECT_LE(tcp_position(one.observations[0].tcp_pose).norm(), 1e-12);

  const Observations sym{{Plane{}, RigidTransform::pure_translation({1, 0, 0})},
                         {Plane{}, RigidTransform::pure_translation({-1, 0, 0})}};
  const CenteredObservations c = center_translations(sym);
  for (std::size_t i = 0; i < 2; ++i) {
    EXPECT_LE((c.observations[i].tcp_pose.matrix() - sym[i].tcp_pose.matrix()).norm(), 0.0);
  }
}

TEST(CenterTranslations, ZeroMeanAndRoundTrip) {
  Gen g(32);
  for (int trial = 0; trial < 50; ++trial) {
    Observations obs;
    for (int i = 0; i < 7; ++i) obs.push_back({g.plane(), g.transform(2.0)});
    const CenteredObservations c = center_translations(obs);
    EXPECT_TRUE(c.centering.rotation.isIdentity(0.0));
    Eigen::Vector3d mean = Eigen::Vector3d::Zero();
    for (const auto& o : c.observations) mean += tcp_position(o.tcp_pose);
    EXPECT_LE((mean / 7.0).norm(), 1e-9);
    for (std::size_t i = 0; i < obs.size(); ++i) {
      const RigidTransform back = c.observations[i].tcp_pose * c.centering.inverse();
      EXPECT_LE((back.matrix() - obs[i].tcp_pose.matrix()).norm(), 1e-12);
      EXPECT_TRUE(c.observations[i].tcp_pose.rotation.isApprox(obs[i].tcp_pose.rotation, 0.0));
    }
  }
}

TEST(Kronecker, VecIdentity) {
  Gen g(33);
  for (int i = 0; i < 200; ++i) {
    const Eigen::Vector3d v = g.vec3();
    const Eigen::Matrix3d rx = g.rotation();
    const Eigen::Matrix3d ra = g.rotation();
    const Eigen::Matrix<double, 9, 1> vec_rx = Eigen::Map<const Eigen::Matrix<double, 9, 1>>(rx.data());
    const Eigen::MatrixXd k = Eigen::kroneckerProduct(ra.transpose(), v.transpose());
    const Eigen::RowVector3d lhs = v.transpose() * rx * ra;
    EXPECT_LE((lhs - (k * vec_rx).transpose()).norm(), 1e-12);
  }
}

TEST(RotationStack, MatchesKroneckerDifferencesAndAnnihilatesTruth) {
  const SyntheticDataset d = noiseless_scene(34, 8);
  const Observations obs = d.truth_observations();
  const Eigen::MatrixXd stack = rotation_constraint_stack(obs);
  ASSERT_EQ(stack.rows(), 21);
  ASSERT_EQ(stack.cols(), 9);
  for (std::size_t j = 0; j + 1 < obs.size(); ++j) {
    const Eigen::MatrixXd expected =
        Eigen::MatrixXd(Eigen::kroneckerProduct(obs[j].tcp_pose.rotation.transpose(),
                                                obs[j].plane.normal.transpose())) -
        Eigen::MatrixXd(Eigen::kroneckerProduct(obs[j + 1].tcp_pose.rotation.transpose(),
                                                obs[j + 1].plane.normal.transpose()));
    EXPECT_LE((stack.middleRows(3 * j, 3) - expected).norm(), 1e-15);
  }
  const Eigen::Matrix3d r = d.truth_X.rotation;
  EXPECT_LE((stack * Eigen::Map<const Eigen::Matrix<double, 9, 1>>(r.data())).norm(), 1e-12);
}

TEST(SolveRotation, RecoversTruthAndIdentity) {
  const SyntheticDataset d = noiseless_scene(35, 6);
  const RotationEstimate r = solve_rotation(center_translations(d.truth_observations()));
  EXPECT_LE(rotation_angle_between(r.rotation, d.truth_X.rotation), 1e-8);
  EXPECT_GE(r.rotation_gap, 0.0);
  EXPECT_LE(r.rotation_gap, 1e-6);

  SceneConfig cfg;
  cfg.ground_truth_X = RigidTransform::identity();
  cfg.num_views = 6;
  cfg.noise = NoiseSpec::none();
  cfg.points_per_view = 10;
  cfg.seed = 36;
  const Observations id_obs = generate_scene(cfg).truth_observations();
  const CenteredObservations c = center_translations(id_obs);
  const RotationEstimate ri = solve_rotation(c);
  EXPECT_LE(rotation_angle_between(ri.rotation, Eigen::Matrix3d::Identity()), 1e-8);
  EXPECT_LE(solve_translation(c, ri.rotation).translation.norm(), 1e-9);
}

TEST(SolveRotation, StaticCameraIsDegenerateMotion) {
  Gen g(37);
  const RigidTransform a = g.transform();
  const Plane p = g.plane();
  Observations obs(5, Observation{p, a});
  EXPECT_EQ(code_of([&] { solve_rotation(center_translations(obs)); }), ErrorCode::kDegenerateMotion);
}

TEST(SolveRotation, PureTranslationSceneIsDegenerateMotion) {
  EXPECT_EQ(code_of([&] { closed_form_calibrate(noiseless(38, 10, 0.0)); }),
            ErrorCode::kDegenerateMotion);
}

TEST(SolveTranslation, RecoversTruth) {
  const SyntheticDataset d = noiseless_scene(39, 6);
  const CenteredObservations c = center_translations(d.truth_observations());
  const TranslationEstimate t = solve_translation(c, d.truth_X.rotation);
  EXPECT_LE((t.translation - d.truth_X.translation).norm(), 1e-9);
  EXPECT_GT(t.condition, 1.0);
}

TEST(SolveTranslation, EqualNormalsAreDegenerate) {
  Gen g(40);
  Observations obs;
  for (int i = 0; i < 6; ++i) obs.push_back({Plane{{0, 0, -1}, g.uniform(0.3, 0.8)}, g.transform()});
  EXPECT_EQ(code_of([&] { solve_translation(center_translations(obs), g.rotation()); }),
            ErrorCode::kDegenerateNormals);
}

TEST(ClosedForm, NeedsFourObservations) {
  const Observations obs = noiseless(41, 6);
  const Observations three(obs.begin(), obs.begin() + 3);
  EXPECT_EQ(code_of([&] { closed_form_calibrate(three); }), ErrorCode::kInsufficientData);
  EXPECT_NO_THROW(closed_form_calibrate(Observations(obs.begin(), obs.begin() + 4)));
}

TEST(ClosedForm, ExactRecoveryAcrossSeeds) {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    for (int n : {5, 30}) {
      const SyntheticDataset d = noiseless_scene(seed, n);
      const ClosedFormResult r = closed_form_calibrate(d.truth_observations());
      EXPECT_LE(rotation_angle_between(r.X.rotation, d.truth_X.rotation), 1e-8) << seed;
      EXPECT_LE((r.X.translation - d.truth_X.translation).norm(), 1e-9) << seed;
      EXPECT_LE(r.diagnostics.residual_rms, 1e-10);
      EXPECT_LE((r.plane_base - d.truth_plane_base.row()).norm(), 1e-9);
    }
  }
}

TEST(ClosedForm, InvariantToBaseOffset) {
  Gen g(42);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Observations obs = noiseless(100 + seed, 8);
    Observations shifted = obs;
    const RigidTransform offset = RigidTransform::pure_translation(g.vec3(5.0));
    for (auto& o : shifted) o.tcp_pose = o.tcp_pose * offset;
    const ClosedFormResult a = closed_form_calibrate(obs);
    const ClosedFormResult b = closed_form_calibrate(shifted);
    EXPECT_LE((a.X.matrix() - b.X.matrix()).norm(), 1e-9);
  }
}

TEST(ClosedForm, PermutationInvariantOnNoiselessData) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Observations obs = noiseless(200 + seed, 8);
    Observations perm = obs;
    std::mt19937_64 rng(seed);
    std::shuffle(perm.begin(), perm.end(), rng);
    const ClosedFormResult a = closed_form_calibrate(obs);
    const ClosedFormResult b = closed_form_calibrate(perm);
    EXPECT_LE(rotation_angle_between(a.X.rotation, b.X.rotation), 1e-7);
    EXPECT_LE((a.X.translation - b.X.translation).norm(), 1e-7);
  }
}

Observations flip_views(const SyntheticDataset& d, std::initializer_list<std::size_t> views) {
  // Turning a camera half a revolution about a line in the base plane keeps
  // the plane in view but from the other side.
  Observations obs = d.truth_observations();
  const Eigen::Vector3d n = d.truth_plane_base.normal;
  const Eigen::Vector3d foot = -d.truth_plane_base.offset * n;
  RigidTransform flip;
  flip.rotation = Eigen::AngleAxisd(std::numbers::pi, n.unitOrthogonal()).toRotationMatrix();
  flip.translation = foot - flip.rotation * foot;
  for (std::size_t i : views) {
    obs[i].tcp_pose = obs[i].tcp_pose * flip;
    obs[i].plane = compose_plane(d.truth_plane_base, (d.truth_X * obs[i].tcp_pose).inverse());
  }
  return obs;
}

TEST(ClosedForm, MixedSidePlanesRejected) {
  const Observations obs = flip_views(noiseless_scene(43, 10), {3, 7});
  const ErrorCode code = code_of([&] { closed_form_calibrate(obs); });
  EXPECT_EQ(code, ErrorCode::kOrientationInconsistency) << to_string(code);
}

TEST(ClosedForm, MixedSideBeyondFirstViewsRejected) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Observations obs = flip_views(noiseless_scene(300 + seed, 20), {11, 17});
    const ErrorCode code = code_of([&] { closed_form_calibrate(obs); });
    EXPECT_EQ(code, ErrorCode::kOrientationInconsistency) << "seed " << seed;
  }
}

TEST(ClosedForm, ThresholdsAreConfigurable) {
  Observations obs = noiseless(44, 6);
  ClosedFormConfig strict;
  strict.max_translation_condition = 1.0;
  EXPECT_EQ(code_of([&] { closed_form_calibrate(obs, strict); }), ErrorCode::kDegenerateNormals);
}

}  // namespace
}  // namespace planehec
