#pragma once

#include <cstdint>

#include <Eigen/Core>

#include "ttx/random.hpp"

namespace ttx {

using Rotation = Eigen::Matrix3d;
using Vec3 = Eigen::Vector3d;

// Rigid transform: p_a = rotation * p_b + translation maps coordinates of a
// point expressed in frame b into frame a. Rotations are kept as full 3x3
// matrices; helpers below check and restore orthonormality.
struct Transform {
  Rotation rotation = Rotation::Identity();
  Vec3 translation = Vec3::Zero();

  static Transform identity() { return {}; }
};

// Body-frame motion increment over one trajectory timestep. The angular part
// is an axis-angle vector (radians); the linear part is the body-frame
// translation increment (meters).
struct Twist {
  Vec3 angular = Vec3::Zero();
  Vec3 linear = Vec3::Zero();
};

Transform compose(const Transform& a, const Transform& b);
Transform inverse(const Transform& t);

inline Transform operator*(const Transform& a, const Transform& b) { return compose(a, b); }

// Rodrigues exponential. Second-order Taylor branch below 1e-10 radians.
Rotation exp_so3(const Vec3& v);

// Axis-angle logarithm. Small-angle branch below 1e-7; symmetric-part
// eigenvector branch above pi - 1e-4 where the antisymmetric part loses the
// axis. Returned magnitude is in [0, pi].
Vec3 log_so3(const Rotation& r);

// max-norm of R^T R - I.
double orthonormality_defect(const Rotation& r);

// Nearest rotation in Frobenius norm (polar decomposition via SVD),
// det-corrected to +1.
Rotation orthonormalized(const Rotation& r);

bool is_rotation(const Rotation& r, double tol = 1e-9);

Rotation rotation_about_x(double angle);
Rotation rotation_about_y(double angle);
Rotation rotation_about_z(double angle);

// Rotation by exactly `magnitude` radians (in [0, pi]) about a uniformly
// random axis.
Rotation random_rotation(double magnitude, Rng& rng);
Rotation random_rotation(double magnitude, std::uint64_t seed);

// Uniform over SO(3) (random unit quaternion).
Rotation random_orientation(Rng& rng);

// Geodesic distance ||log(a b^T)|| in radians.
double rotation_angle_between(const Rotation& a, const Rotation& b);
inline double rotation_angle(const Rotation& r) { return log_so3(r).norm(); }

// Re-express a relative transform recorded in the camera frame in the robot
// frame (or vice versa with the inverse extrinsic): conjugation by the
// camera-to-robot extrinsic t_rc.
Transform change_delta_frame(const Transform& t_rc, const Transform& c_delta);

// Keep only the rotation about the world z-axis: decompose as
// r = Rz(psi) * Ry(theta) * Rx(phi) (extrinsic X-Y-Z) and return Rz(psi).
// Throws DegenerateDecomposition when |theta| is within 1e-6 of pi/2.
Rotation project_to_z_rotation(const Rotation& r);

}  // namespace ttx
