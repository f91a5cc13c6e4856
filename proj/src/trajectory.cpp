#include "ttx/trajectory.hpp"

#include <cmath>

#include "ttx/errors.hpp"

namespace ttx {

void DemoTrajectory::check_valid() const {
  if (timestep_s <= 0.0) throw ConfigError("DemoTrajectory: timestep must be positive");
  if (poses.empty()) throw ConfigError("DemoTrajectory: needs at least one pose");
}

TransferResult transfer_trajectory(const DemoTrajectory& demo, const Transform& r_delta) {
  demo.check_valid();
  TransferResult out;
  out.applied_delta_robot = r_delta;
  out.poses.reserve(demo.poses.size());
  for (const Transform& pose : demo.poses) {
    out.poses.push_back(compose(r_delta, pose));
  }
  return out;
}

Transform adjust_delta_translation(const Transform& r_delta, const Transform& first_demo_pose) {
  const Rotation projected = project_to_z_rotation(r_delta.rotation);
  const Vec3 p = first_demo_pose.translation;
  Transform out;
  out.rotation = projected;
  out.translation = r_delta.rotation * p - projected * p + r_delta.translation;
  return out;
}

std::vector<Twist> trajectory_to_twists(const DemoTrajectory& demo) {
  demo.check_valid();
  std::vector<Twist> twists;
  if (demo.poses.size() < 2) return twists;
  twists.reserve(demo.poses.size() - 1);
  for (std::size_t t = 0; t + 1 < demo.poses.size(); ++t) {
    const Transform rel = compose(inverse(demo.poses[t]), demo.poses[t + 1]);
    const Vec3 angular = log_so3(rel.rotation);
    if (angular.norm() >= M_PI - 1e-7) {
      throw AmbiguousIncrement(
          "trajectory_to_twists: consecutive rotations are a half turn apart");
    }
    twists.push_back({angular, rel.translation});
  }
  return twists;
}

std::vector<Transform> integrate_twists(const Transform& start,
                                        const std::vector<Twist>& twists) {
  std::vector<Transform> poses;
  poses.reserve(twists.size() + 1);
  poses.push_back(start);
  Transform current = start;
  for (const Twist& tw : twists) {
    const Transform increment{exp_so3(tw.angular), tw.linear};
    current = compose(current, increment);
    if (orthonormality_defect(current.rotation) > 1e-7) {
      current.rotation = orthonormalized(current.rotation);
    }
    poses.push_back(current);
  }
  return poses;
}

EefError eef_start_error(const Transform& truth, const Transform& estimate) {
  EefError e;
  e.translation_m = (truth.translation - estimate.translation).norm();
  e.rotation_rad = rotation_angle_between(truth.rotation, estimate.rotation);
  return e;
}

}  // namespace ttx
