#pragma once

#include <string>
#include <vector>

#include "ttx/se3.hpp"

namespace ttx {

// Demonstrated end-effector path: robot-frame poses sampled at a fixed
// timestep (30 Hz control by default).
struct DemoTrajectory {
  double timestep_s = 1.0 / 30.0;
  std::vector<Transform> poses;

  void check_valid() const;
};

// Output of applying a relative object transform to a demo trajectory.
struct TransferResult {
  std::vector<Transform> poses;      // robot-frame end-effector poses
  Transform applied_delta_robot;     // the delta that was left-composed
  bool bias_applied = false;
};

// Left-compose the robot-frame delta onto every demo pose.
TransferResult transfer_trajectory(const DemoTrajectory& demo, const Transform& r_delta);

// Replace the delta's rotation by its world-z projection and shift its
// translation so the first transferred end-effector position is preserved:
//   t_adj = r * p - r_proj * p + t  with p the first demo position.
// Throws DegenerateDecomposition when the rotation sits in the gimbal band.
Transform adjust_delta_translation(const Transform& r_delta, const Transform& first_demo_pose);

// Body-frame increments between consecutive poses:
//   twist[t] = (log(R_t^T R_{t+1}), body-frame translation increment).
// Throws AmbiguousIncrement when consecutive rotations are a half turn
// apart (the increment axis is not recoverable).
std::vector<Twist> trajectory_to_twists(const DemoTrajectory& demo);

// Replay increments from a (possibly different) start pose:
//   pose_{t+1} = pose_t * exp(twist_t).
// Rotations are re-orthonormalized whenever the accumulated defect exceeds
// 1e-7.
std::vector<Transform> integrate_twists(const Transform& start, const std::vector<Twist>& twists);

struct EefError {
  double translation_m = 0.0;
  double rotation_rad = 0.0;
};

// Pose discrepancy between two end-effector poses.
EefError eef_start_error(const Transform& truth, const Transform& estimate);

}  // namespace ttx
