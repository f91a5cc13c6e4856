#pragma once

#include <vector>

#include "ttx/scene.hpp"
#include "ttx/se3.hpp"

namespace ttx {

// Error between an estimated and a ground-truth relative pose, measured on
// the residual transform mapping the estimate onto the truth.
struct PoseError {
  double translation_m = 0.0;
  double rotation_rad = 0.0;  // geodesic angle, in [0, pi]
  int chosen_ground_truth = 0;  // index into the enumerated symmetry set
};

// Residual-transform error: T_eps = truth * inverse(estimate), scored as
// (|t_eps|, |log R_eps|).
PoseError pose_error(const Transform& truth, const Transform& estimate);

// All relative poses indistinguishable from the recorded delta under the
// object's declared symmetry: delta_k = T_CO_test * S_k * inverse(T_CO_demo)
// with S_k a rotation about the object's own z-axis. None -> the recorded
// delta alone; finite order n -> n transforms; infinite -> 360 transforms at
// 1-degree spacing. Geometry-only categories use their geometric order.
std::vector<Transform> enumerate_symmetry_ground_truths(const ScenePair& pair);

// pose_error against every enumerated ground truth, keeping the one with the
// smallest rotation error (ties break toward the smallest index).
PoseError symmetry_aware_error(const ScenePair& pair, const Transform& estimate);

}  // namespace ttx
