#include "ttx/se3.hpp"

#include <cmath>

#include <Eigen/Dense>

#include "ttx/errors.hpp"

namespace ttx {

namespace {

Eigen::Matrix3d skew(const Vec3& v) {
  Eigen::Matrix3d k;
  // clang-format off
  k <<     0, -v.z(),  v.y(),
       v.z(),      0, -v.x(),
      -v.y(),  v.x(),      0;
  // clang-format on
  return k;
}

}  // namespace

Transform compose(const Transform& a, const Transform& b) {
  return {a.rotation * b.rotation, a.rotation * b.translation + a.translation};
}

Transform inverse(const Transform& t) {
  Rotation rt = t.rotation.transpose();
  return {rt, -(rt * t.translation)};
}

Rotation exp_so3(const Vec3& v) {
  const double theta = v.norm();
  const Eigen::Matrix3d k = skew(v);
  if (theta < 1e-10) {
    // Taylor: I + K + K^2/2, remainder O(theta^3) is below double precision.
    return Rotation::Identity() + k + 0.5 * k * k;
  }
  const Eigen::Matrix3d kn = k / theta;
  return Rotation::Identity() + std::sin(theta) * kn + (1.0 - std::cos(theta)) * kn * kn;
}

Vec3 log_so3(const Rotation& r) {
  // w = 2 sin(theta) * axis; atan2 keeps the angle accurate at both ends of
  // [0, pi], unlike acos of the trace alone.
  const Vec3 w(r(2, 1) - r(1, 2), r(0, 2) - r(2, 0), r(1, 0) - r(0, 1));
  const double s = 0.5 * w.norm();
  const double c = 0.5 * (r.trace() - 1.0);
  const double theta = std::atan2(s, c);

  if (theta < 1e-7) {
    return 0.5 * w;  // axis*theta to O(theta^3)
  }

  if (theta > M_PI - 1e-4) {
    // Near a half turn the antisymmetric part vanishes; recover the axis as
    // the eigenvector of the symmetric part with eigenvalue 1.
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(0.5 * (r + r.transpose()));
    Vec3 axis = es.eigenvectors().col(2);  // eigenvalues ascending
    axis.normalize();
    const double along = axis.dot(w);
    if (std::abs(along) > 1e-12) {
      if (along < 0) axis = -axis;
    } else {
      // Exactly pi: both signs are valid logs; pick a deterministic one.
      int imax = 0;
      axis.cwiseAbs().maxCoeff(&imax);
      if (axis(imax) < 0) axis = -axis;
    }
    return theta * axis;
  }

  return (theta / (2.0 * s)) * w;
}

double orthonormality_defect(const Rotation& r) {
  return (r.transpose() * r - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff();
}

Rotation orthonormalized(const Rotation& r) {
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(r, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Rotation q = svd.matrixU() * svd.matrixV().transpose();
  if (q.determinant() < 0) {
    Eigen::Matrix3d u = svd.matrixU();
    u.col(2) *= -1.0;
    q = u * svd.matrixV().transpose();
  }
  return q;
}

bool is_rotation(const Rotation& r, double tol) {
  return orthonormality_defect(r) <= tol && std::abs(r.determinant() - 1.0) <= tol;
}

Rotation rotation_about_x(double angle) {
  return Eigen::AngleAxisd(angle, Vec3::UnitX()).toRotationMatrix();
}

Rotation rotation_about_y(double angle) {
  return Eigen::AngleAxisd(angle, Vec3::UnitY()).toRotationMatrix();
}

Rotation rotation_about_z(double angle) {
  return Eigen::AngleAxisd(angle, Vec3::UnitZ()).toRotationMatrix();
}

Rotation random_rotation(double magnitude, Rng& rng) {
  if (magnitude < 0.0 || magnitude > M_PI) {
    throw ConfigError("random_rotation: magnitude must lie in [0, pi]");
  }
  const Vec3 axis = random_unit_vector(rng);
  return exp_so3(magnitude * axis);
}

Rotation random_rotation(double magnitude, std::uint64_t seed) {
  Rng rng = make_rng(seed);
  return random_rotation(magnitude, rng);
}

Rotation random_orientation(Rng& rng) {
  // Normalized 4-gaussian quaternion is uniform over SO(3).
  double q[4];
  double n2 = 0.0;
  do {
    n2 = 0.0;
    for (double& qi : q) {
      qi = gaussian(rng);
      n2 += qi * qi;
    }
  } while (n2 < 1e-12);
  const double n = std::sqrt(n2);
  Eigen::Quaterniond quat(q[0] / n, q[1] / n, q[2] / n, q[3] / n);
  return quat.toRotationMatrix();
}

double rotation_angle_between(const Rotation& a, const Rotation& b) {
  return log_so3(a * b.transpose()).norm();
}

Transform change_delta_frame(const Transform& t_rc, const Transform& c_delta) {
  return compose(compose(t_rc, c_delta), inverse(t_rc));
}

Rotation project_to_z_rotation(const Rotation& r) {
  // r = Rz(psi) Ry(theta) Rx(phi):
  //   r(2,0) = -sin(theta), r(1,0)/r(0,0) = tan(psi), r(2,1)/r(2,2) = tan(phi)
  const double st = std::clamp(-r(2, 0), -1.0, 1.0);
  const double theta = std::asin(st);
  if (std::abs(std::abs(theta) - M_PI / 2.0) < 1e-6) {
    throw DegenerateDecomposition(
        "project_to_z_rotation: pitch within 1e-6 of +/-pi/2, z angle undefined");
  }
  const double psi = std::atan2(r(1, 0), r(0, 0));
  return rotation_about_z(psi);
}

}  // namespace ttx
