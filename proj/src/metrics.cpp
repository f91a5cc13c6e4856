#include "ttx/metrics.hpp"

#include <cmath>

#include "ttx/errors.hpp"

namespace ttx {

PoseError pose_error(const Transform& truth, const Transform& estimate) {
  const Transform eps = compose(truth, inverse(estimate));
  PoseError err;
  err.translation_m = eps.translation.norm();
  err.rotation_rad = log_so3(eps.rotation).norm();
  return err;
}

std::vector<Transform> enumerate_symmetry_ground_truths(const ScenePair& pair) {
  pair.symmetry.check_valid();
  if (pair.symmetry.kind == SymmetrySpec::Kind::None) return {pair.true_delta_camera};

  const int bins = pair.symmetry.kind == SymmetrySpec::Kind::Infinite ? 360
                                                                      : pair.symmetry.order;
  const Transform demo_inv = inverse(pair.object_pose_demo);
  std::vector<Transform> out;
  out.reserve(static_cast<std::size_t>(bins));
  for (int k = 0; k < bins; ++k) {
    const Transform sym{rotation_about_z(2.0 * M_PI * k / bins), Vec3::Zero()};
    out.push_back(compose(pair.object_pose_test, compose(sym, demo_inv)));
  }
  return out;
}

PoseError symmetry_aware_error(const ScenePair& pair, const Transform& estimate) {
  const std::vector<Transform> truths = enumerate_symmetry_ground_truths(pair);
  PoseError best;
  bool first = true;
  for (std::size_t k = 0; k < truths.size(); ++k) {
    PoseError err = pose_error(truths[k], estimate);
    err.chosen_ground_truth = static_cast<int>(k);
    if (first || err.rotation_rad < best.rotation_rad) {
      best = err;
      first = false;
    }
  }
  return best;
}

}  // namespace ttx
