#include "ttx/se3.hpp"

#include <cmath>

#include <Eigen/Dense>
#include <doctest.h>

#include "ttx/errors.hpp"
#include "ttx/random.hpp"

using namespace ttx;

namespace {

Transform random_transform(Rng& rng, double translation_scale = 1.0) {
  Transform t;
  t.rotation = random_orientation(rng);
  t.translation = translation_scale * gaussian3(rng);
  return t;
}

// Independent oracle: carry out the same composition with plain 4x4
// homogeneous matrices.
Eigen::Matrix4d to_mat4(const Transform& t) {
  Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
  m.topLeftCorner<3, 3>() = t.rotation;
  m.topRightCorner<3, 1>() = t.translation;
  return m;
}

}  // namespace

TEST_CASE("compose matches homogeneous 4x4 multiplication") {
  Rng rng = make_rng(101);
  for (int i = 0; i < 200; ++i) {
    const Transform a = random_transform(rng);
    const Transform b = random_transform(rng);
    const Transform ab = compose(a, b);
    const Eigen::Matrix4d oracle = to_mat4(a) * to_mat4(b);
    CHECK((to_mat4(ab) - oracle).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("compose with identity is a no-op") {
  Rng rng = make_rng(102);
  const Transform a = random_transform(rng);
  const Transform left = compose(Transform::identity(), a);
  const Transform right = compose(a, Transform::identity());
  CHECK((left.rotation - a.rotation).cwiseAbs().maxCoeff() == 0.0);
  CHECK((right.rotation - a.rotation).cwiseAbs().maxCoeff() == 0.0);
  CHECK((left.translation - a.translation).cwiseAbs().maxCoeff() == 0.0);
  CHECK((right.translation - a.translation).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("inverse composes to identity both ways") {
  Rng rng = make_rng(103);
  for (int i = 0; i < 200; ++i) {
    const Transform t = random_transform(rng);
    const Transform li = compose(inverse(t), t);
    const Transform ri = compose(t, inverse(t));
    CHECK((li.rotation - Rotation::Identity()).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(li.translation.norm() < 1e-12);
    CHECK((ri.rotation - Rotation::Identity()).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(ri.translation.norm() < 1e-12);
  }
}

TEST_CASE("exp_so3 of zero is the identity") {
  const Rotation r = exp_so3(Vec3::Zero());
  CHECK((r - Rotation::Identity()).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("exp_so3 matches the quaternion exponential") {
  // Oracle: Eigen's AngleAxis goes through an independent quaternion path.
  Rng rng = make_rng(104);
  for (int i = 0; i < 500; ++i) {
    const Vec3 axis = random_unit_vector(rng);
    const double angle = uniform_real(rng, 0.0, M_PI);
    const Rotation r = exp_so3(angle * axis);
    const Rotation oracle = Eigen::AngleAxisd(angle, axis).toRotationMatrix();
    CHECK((r - oracle).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(is_rotation(r, 1e-12));
  }
}

TEST_CASE("log/exp round trip over the whole branch range") {
  Rng rng = make_rng(105);
  for (int i = 0; i < 1000; ++i) {
    const Vec3 axis = random_unit_vector(rng);
    // Cover all three branches: tiny, generic, and near-pi magnitudes.
    double mag = 0.0;
    switch (i % 4) {
      case 0: mag = uniform_real(rng, 0.0, 1e-8); break;
      case 1: mag = uniform_real(rng, 1e-8, 1e-4); break;
      case 2: mag = uniform_real(rng, 1e-4, M_PI - 1e-3); break;
      default: mag = uniform_real(rng, M_PI - 1e-3, M_PI - 1e-9); break;
    }
    const Vec3 v = mag * axis;
    const Vec3 back = log_so3(exp_so3(v));
    CHECK((back - v).norm() < 1e-9);
  }
}

TEST_CASE("log_so3 at exactly pi returns a valid half-turn log") {
  Rng rng = make_rng(106);
  for (int i = 0; i < 100; ++i) {
    const Vec3 axis = random_unit_vector(rng);
    const Rotation r = exp_so3(M_PI * axis);
    const Vec3 v = log_so3(r);
    CHECK(v.norm() == doctest::Approx(M_PI).epsilon(1e-9));
    // The recovered axis must match up to sign (both signs are valid at pi).
    const double align = std::abs(v.normalized().dot(axis));
    CHECK(align == doctest::Approx(1.0).epsilon(1e-7));
    // And re-exponentiating must reproduce the rotation itself.
    CHECK((exp_so3(v) - r).cwiseAbs().maxCoeff() < 1e-7);
  }
}

TEST_CASE("rotation helpers produce expected canonical matrices") {
  const Rotation rz = rotation_about_z(M_PI / 2.0);
  Vec3 x = rz * Vec3::UnitX();
  CHECK((x - Vec3::UnitY()).norm() < 1e-12);
  const Rotation ry = rotation_about_y(M_PI / 2.0);
  CHECK((ry * Vec3::UnitZ() - Vec3::UnitX()).norm() < 1e-12);
  const Rotation rx = rotation_about_x(M_PI / 2.0);
  CHECK((rx * Vec3::UnitY() - Vec3::UnitZ()).norm() < 1e-12);
}

TEST_CASE("random_rotation has exact requested magnitude") {
  Rng rng = make_rng(107);
  for (int i = 0; i < 200; ++i) {
    const double mag = uniform_real(rng, 0.0, M_PI - 1e-6);
    const Rotation r = random_rotation(mag, rng);
    CHECK(std::abs(log_so3(r).norm() - mag) < 1e-12);
    CHECK(is_rotation(r, 1e-12));
  }
  const Rotation zero = random_rotation(0.0, rng);
  CHECK((zero - Rotation::Identity()).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("random_rotation is deterministic per seed") {
  const Rotation a = random_rotation(0.3, std::uint64_t{42});
  const Rotation b = random_rotation(0.3, std::uint64_t{42});
  const Rotation c = random_rotation(0.3, std::uint64_t{43});
  CHECK((a - b).cwiseAbs().maxCoeff() == 0.0);
  CHECK((a - c).cwiseAbs().maxCoeff() > 1e-6);
}

TEST_CASE("random_rotation axis distribution is octant-uniform") {
  // Chi-squared over the 8 axis octants; 7 dof, p > 0.01 means stat < 18.475.
  Rng rng = make_rng(108);
  constexpr int kDraws = 100000;
  int counts[8] = {0};
  for (int i = 0; i < kDraws; ++i) {
    const Rotation r = random_rotation(0.5, rng);
    const Vec3 axis = log_so3(r).normalized();
    const int octant =
        (axis.x() > 0 ? 1 : 0) | (axis.y() > 0 ? 2 : 0) | (axis.z() > 0 ? 4 : 0);
    counts[octant]++;
  }
  const double expected = kDraws / 8.0;
  double chi2 = 0.0;
  for (int c : counts) chi2 += (c - expected) * (c - expected) / expected;
  CHECK(chi2 < 18.475);
}

TEST_CASE("rejects magnitude outside [0, pi]") {
  Rng rng = make_rng(109);
  CHECK_THROWS_AS(random_rotation(-0.1, rng), ConfigError);
  CHECK_THROWS_AS(random_rotation(M_PI + 0.1, rng), ConfigError);
}

TEST_CASE("change_delta_frame: identity extrinsic is a no-op") {
  Rng rng = make_rng(110);
  const Transform delta = random_transform(rng);
  const Transform out = change_delta_frame(Transform::identity(), delta);
  CHECK((to_mat4(out) - to_mat4(delta)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("change_delta_frame agrees with the two-route frame change") {
  // Route A: conjugate the camera-frame delta by the extrinsic.
  // Route B: move both object poses to the robot frame first, then form the
  // relative transform there. The two must agree for any poses.
  Rng rng = make_rng(111);
  for (int i = 0; i < 500; ++i) {
    const Transform t_rc = random_transform(rng);
    const Transform t_co_demo = random_transform(rng);
    const Transform t_co_test = random_transform(rng);

    const Transform c_delta = compose(t_co_test, inverse(t_co_demo));
    const Transform route_a = change_delta_frame(t_rc, c_delta);

    const Transform t_ro_demo = compose(t_rc, t_co_demo);
    const Transform t_ro_test = compose(t_rc, t_co_test);
    const Transform route_b = compose(t_ro_test, inverse(t_ro_demo));

    CHECK((to_mat4(route_a) - to_mat4(route_b)).cwiseAbs().maxCoeff() < 1e-9);
  }
}

TEST_CASE("change_delta_frame round-trips through the inverse extrinsic") {
  Rng rng = make_rng(112);
  for (int i = 0; i < 100; ++i) {
    const Transform t_rc = random_transform(rng);
    const Transform delta = random_transform(rng);
    const Transform there = change_delta_frame(t_rc, delta);
    const Transform back = change_delta_frame(inverse(t_rc), there);
    CHECK((to_mat4(back) - to_mat4(delta)).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("project_to_z_rotation keeps pure z-rotations unchanged") {
  Rng rng = make_rng(113);
  for (int i = 0; i < 100; ++i) {
    const double psi = uniform_real(rng, -M_PI + 1e-6, M_PI - 1e-6);
    const Rotation r = rotation_about_z(psi);
    const Rotation p = project_to_z_rotation(r);
    CHECK((p - r).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("project_to_z_rotation drops pure x/y tilts to identity") {
  const Rotation px = project_to_z_rotation(rotation_about_x(0.3));
  const Rotation py = project_to_z_rotation(rotation_about_y(0.2));
  CHECK((px - Rotation::Identity()).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((py - Rotation::Identity()).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("project_to_z_rotation recovers the z angle of a mixed rotation") {
  // Extrinsic X-Y-Z composition: Rz(psi) Ry(theta) Rx(phi). The projection
  // must return exactly Rz(psi).
  Rng rng = make_rng(114);
  for (int i = 0; i < 500; ++i) {
    const double psi = uniform_real(rng, -M_PI + 1e-3, M_PI - 1e-3);
    const double theta = uniform_real(rng, -M_PI / 2 + 1e-3, M_PI / 2 - 1e-3);
    const double phi = uniform_real(rng, -M_PI + 1e-3, M_PI - 1e-3);
    const Rotation r = rotation_about_z(psi) * rotation_about_y(theta) * rotation_about_x(phi);
    const Rotation p = project_to_z_rotation(r);
    CHECK((p - rotation_about_z(psi)).cwiseAbs().maxCoeff() < 1e-9);
  }
}

TEST_CASE("project_to_z_rotation is idempotent") {
  Rng rng = make_rng(115);
  for (int i = 0; i < 200; ++i) {
    const Rotation r = random_orientation(rng);
    Rotation once;
    try {
      once = project_to_z_rotation(r);
    } catch (const DegenerateDecomposition&) {
      continue;  // vanishingly rare for random draws; skip
    }
    const Rotation twice = project_to_z_rotation(once);
    CHECK((twice - once).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("project_to_z_rotation throws in the gimbal band") {
  CHECK_THROWS_AS(project_to_z_rotation(rotation_about_y(M_PI / 2.0)), DegenerateDecomposition);
  CHECK_THROWS_AS(project_to_z_rotation(rotation_about_y(-M_PI / 2.0)), DegenerateDecomposition);
  CHECK_THROWS_AS(project_to_z_rotation(rotation_about_y(M_PI / 2.0 - 1e-7)),
                  DegenerateDecomposition);
  // Just outside the band it must decompose fine.
  CHECK_NOTHROW(project_to_z_rotation(rotation_about_y(M_PI / 2.0 - 1e-3)));
}

TEST_CASE("rotation_angle_between is a geodesic distance") {
  Rng rng = make_rng(116);
  for (int i = 0; i < 200; ++i) {
    const Rotation a = random_orientation(rng);
    const double angle = uniform_real(rng, 0.0, M_PI - 1e-6);
    const Vec3 axis = random_unit_vector(rng);
    const Rotation b = exp_so3(angle * axis) * a;
    CHECK(rotation_angle_between(b, a) == doctest::Approx(angle).epsilon(1e-9));
    CHECK(rotation_angle_between(a, a) < 1e-12);
    // Symmetry.
    CHECK(rotation_angle_between(a, b) == doctest::Approx(rotation_angle_between(b, a)).epsilon(1e-12));
  }
}

TEST_CASE("orthonormalized repairs a perturbed rotation") {
  Rng rng = make_rng(117);
  for (int i = 0; i < 100; ++i) {
    const Rotation r = random_orientation(rng);
    Rotation noisy = r;
    for (int k = 0; k < 3; ++k)
      for (int j = 0; j < 3; ++j) noisy(k, j) += 1e-6 * gaussian(rng);
    const Rotation fixed = orthonormalized(noisy);
    CHECK(is_rotation(fixed, 1e-12));
    CHECK((fixed - r).cwiseAbs().maxCoeff() < 1e-5);
  }
}

TEST_CASE("orthonormality_defect reports the max-norm defect") {
  Rotation r = Rotation::Identity();
  CHECK(orthonormality_defect(r) == 0.0);
  r(0, 0) = 1.0 + 1e-7;
  CHECK(orthonormality_defect(r) > 1e-7);
  CHECK(orthonormality_defect(r) < 3e-7);
}
