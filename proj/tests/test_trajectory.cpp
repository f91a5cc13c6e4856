#include "ttx/trajectory.hpp"

#include <cmath>

#include <doctest.h>

#include "ttx/errors.hpp"
#include "ttx/random.hpp"

using namespace ttx;

namespace {

Transform random_transform(Rng& rng, double translation_scale = 0.5) {
  return {random_orientation(rng), translation_scale * gaussian3(rng)};
}

DemoTrajectory random_trajectory(Rng& rng, int n, double step_angle = 0.05,
                                 double step_translation = 0.01) {
  DemoTrajectory demo;
  Transform pose = random_transform(rng);
  demo.poses.push_back(pose);
  for (int i = 1; i < n; ++i) {
    Twist tw{step_angle * random_unit_vector(rng), step_translation * gaussian3(rng)};
    pose = compose(pose, Transform{exp_so3(tw.angular), tw.linear});
    demo.poses.push_back(pose);
  }
  return demo;
}

double max_pose_diff(const Transform& a, const Transform& b) {
  return std::max((a.rotation - b.rotation).cwiseAbs().maxCoeff(),
                  (a.translation - b.translation).cwiseAbs().maxCoeff());
}

}  // namespace

TEST_CASE("identity delta returns the demo unchanged") {
  Rng rng = make_rng(201);
  const DemoTrajectory demo = random_trajectory(rng, 20);
  const TransferResult out = transfer_trajectory(demo, Transform::identity());
  REQUIRE(out.poses.size() == demo.poses.size());
  for (std::size_t i = 0; i < demo.poses.size(); ++i) {
    CHECK(max_pose_diff(out.poses[i], demo.poses[i]) == 0.0);
  }
}

TEST_CASE("pure translation delta shifts every pose") {
  Rng rng = make_rng(202);
  const DemoTrajectory demo = random_trajectory(rng, 15);
  const Vec3 shift(0.1, -0.2, 0.05);
  const TransferResult out = transfer_trajectory(demo, Transform{Rotation::Identity(), shift});
  for (std::size_t i = 0; i < demo.poses.size(); ++i) {
    CHECK((out.poses[i].translation - demo.poses[i].translation - shift).norm() < 1e-15);
    CHECK((out.poses[i].rotation - demo.poses[i].rotation).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("transfer is equivariant under composed deltas") {
  Rng rng = make_rng(203);
  for (int trial = 0; trial < 50; ++trial) {
    const DemoTrajectory demo = random_trajectory(rng, 10);
    const Transform a = random_transform(rng);
    const Transform b = random_transform(rng);
    const TransferResult direct = transfer_trajectory(demo, compose(a, b));
    DemoTrajectory intermediate = demo;
    intermediate.poses = transfer_trajectory(demo, b).poses;
    const TransferResult staged = transfer_trajectory(intermediate, a);
    for (std::size_t i = 0; i < demo.poses.size(); ++i) {
      CHECK(max_pose_diff(direct.poses[i], staged.poses[i]) < 1e-12);
    }
  }
}

TEST_CASE("object-frame poses are preserved under ground-truth transfer") {
  // If the delta comes from true object poses, the end effector keeps the
  // same pose relative to the object: inv(T_ro_test) * transferred equals
  // inv(T_ro_demo) * demo at every timestep.
  Rng rng = make_rng(204);
  for (int trial = 0; trial < 50; ++trial) {
    const DemoTrajectory demo = random_trajectory(rng, 12);
    const Transform t_ro_demo = random_transform(rng);
    const Transform t_ro_test = random_transform(rng);
    const Transform r_delta = compose(t_ro_test, inverse(t_ro_demo));
    const TransferResult out = transfer_trajectory(demo, r_delta);
    for (std::size_t i = 0; i < demo.poses.size(); ++i) {
      const Transform obj_demo = compose(inverse(t_ro_demo), demo.poses[i]);
      const Transform obj_test = compose(inverse(t_ro_test), out.poses[i]);
      CHECK(max_pose_diff(obj_demo, obj_test) < 1e-9);
    }
  }
}

TEST_CASE("adjust_delta_translation: identity rotation keeps translation") {
  Rng rng = make_rng(205);
  const Transform first = random_transform(rng);
  const Vec3 t(0.3, 0.1, -0.2);
  const Transform adj = adjust_delta_translation({Rotation::Identity(), t}, first);
  CHECK((adj.rotation - Rotation::Identity()).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((adj.translation - t).norm() < 1e-15);
}

TEST_CASE("adjust_delta_translation: zero lever arm keeps translation") {
  Rng rng = make_rng(206);
  const Transform delta = random_transform(rng);
  Transform first = random_transform(rng);
  first.translation = Vec3::Zero();
  const Transform adj = adjust_delta_translation(delta, first);
  CHECK((adj.translation - delta.translation).norm() == 0.0);
}

TEST_CASE("adjust_delta_translation preserves the first transferred position") {
  Rng rng = make_rng(207);
  for (int trial = 0; trial < 200; ++trial) {
    const Transform delta = random_transform(rng);
    const Transform first = random_transform(rng);
    Transform adj;
    try {
      adj = adjust_delta_translation(delta, first);
    } catch (const DegenerateDecomposition&) {
      continue;
    }
    const Vec3 original = compose(delta, first).translation;
    const Vec3 adjusted = compose(adj, first).translation;
    CHECK((original - adjusted).norm() < 1e-12);
  }
}

TEST_CASE("adjust_delta_translation is idempotent") {
  Rng rng = make_rng(208);
  for (int trial = 0; trial < 100; ++trial) {
    const Transform delta = random_transform(rng);
    const Transform first = random_transform(rng);
    Transform once;
    try {
      once = adjust_delta_translation(delta, first);
    } catch (const DegenerateDecomposition&) {
      continue;
    }
    const Transform twice = adjust_delta_translation(once, first);
    CHECK(max_pose_diff(once, twice) < 1e-12);
  }
}

TEST_CASE("adjust_delta_translation propagates the gimbal error") {
  const Transform delta{rotation_about_y(M_PI / 2.0), Vec3(0.1, 0, 0)};
  CHECK_THROWS_AS(adjust_delta_translation(delta, Transform::identity()),
                  DegenerateDecomposition);
}

TEST_CASE("twist round trip reproduces the trajectory") {
  Rng rng = make_rng(209);
  for (int trial = 0; trial < 100; ++trial) {
    const DemoTrajectory demo = random_trajectory(rng, 50);
    const auto twists = trajectory_to_twists(demo);
    REQUIRE(twists.size() == demo.poses.size() - 1);
    const auto replay = integrate_twists(demo.poses.front(), twists);
    REQUIRE(replay.size() == demo.poses.size());
    for (std::size_t i = 0; i < demo.poses.size(); ++i) {
      CHECK(max_pose_diff(replay[i], demo.poses[i]) < 1e-9);
    }
  }
}

TEST_CASE("constant-twist trajectory yields constant twists") {
  DemoTrajectory demo;
  const Twist tw{Vec3(0.0, 0.0, 0.02), Vec3(0.001, 0.0, -0.002)};
  Transform pose = Transform::identity();
  demo.poses.push_back(pose);
  for (int i = 0; i < 30; ++i) {
    pose = compose(pose, Transform{exp_so3(tw.angular), tw.linear});
    demo.poses.push_back(pose);
  }
  const auto twists = trajectory_to_twists(demo);
  for (const Twist& t : twists) {
    CHECK((t.angular - tw.angular).norm() < 1e-12);
    CHECK((t.linear - tw.linear).norm() < 1e-12);
  }
}

TEST_CASE("replay from a transferred start equals transferring the replay") {
  // Body-frame increments commute with a left-composed delta: integrating the
  // demo twists from delta*pose0 lands on the transferred trajectory.
  Rng rng = make_rng(210);
  for (int trial = 0; trial < 50; ++trial) {
    const DemoTrajectory demo = random_trajectory(rng, 25);
    const Transform delta = random_transform(rng);
    const auto twists = trajectory_to_twists(demo);
    const auto replay = integrate_twists(compose(delta, demo.poses.front()), twists);
    const TransferResult direct = transfer_trajectory(demo, delta);
    for (std::size_t i = 0; i < demo.poses.size(); ++i) {
      CHECK(max_pose_diff(replay[i], direct.poses[i]) < 1e-9);
    }
  }
}

TEST_CASE("half-turn increments are rejected as ambiguous") {
  DemoTrajectory demo;
  demo.poses.push_back(Transform::identity());
  demo.poses.push_back(Transform{rotation_about_z(M_PI), Vec3::Zero()});
  CHECK_THROWS_AS(trajectory_to_twists(demo), AmbiguousIncrement);
}

TEST_CASE("long integration chains keep rotations orthonormal") {
  Rng rng = make_rng(211);
  std::vector<Twist> twists;
  for (int i = 0; i < 20000; ++i) {
    twists.push_back({0.01 * random_unit_vector(rng), 0.001 * gaussian3(rng)});
  }
  const auto poses = integrate_twists(Transform::identity(), twists);
  CHECK(orthonormality_defect(poses.back().rotation) < 1e-6);
}

TEST_CASE("empty and invalid trajectories are rejected") {
  DemoTrajectory empty;
  CHECK_THROWS_AS(transfer_trajectory(empty, Transform::identity()), ConfigError);
  DemoTrajectory bad_step;
  bad_step.timestep_s = 0.0;
  bad_step.poses.push_back(Transform::identity());
  CHECK_THROWS_AS(trajectory_to_twists(bad_step), ConfigError);
}

TEST_CASE("eef_start_error measures pose discrepancy") {
  Rng rng = make_rng(212);
  const Transform truth = random_transform(rng);
  Transform est = truth;
  est.translation += Vec3(0.03, 0.0, -0.04);
  est.rotation = rotation_about_z(0.1) * est.rotation;
  const EefError e = eef_start_error(truth, est);
  CHECK(e.translation_m == doctest::Approx(0.05).epsilon(1e-12));
  CHECK(e.rotation_rad == doctest::Approx(0.1).epsilon(1e-9));
}
