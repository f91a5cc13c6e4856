#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ttx/kdtree.hpp"
#include "ttx/scene.hpp"
#include "ttx/se3.hpp"

namespace ttx {

// Output of a relative-pose estimator: the camera-frame delta mapping the
// demo-time object pose onto the test-time pose, a method-specific alignment
// score, and counters for diagnostics (restarts-tried, iterations,
// inlier-count, ...).
struct PoseEstimate {
  Transform delta_camera;
  double residual = 0.0;
  std::map<std::string, std::int64_t> diagnostics;
};

// Restart budget for icp_multirestart. A positive count is bit-reproducible
// and is what tests use; count == 0 falls back to the wall-time budget,
// which matches interactive use but is inherently non-reproducible.
struct RestartBudget {
  int count = 0;
  double wall_time_s = 5.0;
};

struct IcpConfig {
  double max_correspondence_distance = 0.10;  // meters
  int max_iterations_per_restart = 10;
  RestartBudget budget;
  double init_translation_sigma = 0.01;  // meters, noise on the centering init
  bool z_rotation_prior = true;          // restarts rotate about the robot z only
  double init_max_z_rotation = M_PI / 4.0;  // prior rotation range, radians
  // When set, restart 0 starts from this camera-frame delta verbatim.
  std::optional<Transform> initial_guess;

  void check_valid() const;
};

enum class TemplateScore { GeometryOnly, GeometryColor };

struct TemplateConfig {
  double angle_min_deg = -44.5;
  double angle_max_deg = 44.5;
  double angle_step_deg = 1.0;
  TemplateScore score = TemplateScore::GeometryColor;
  double color_weight = 0.1;
  double trim_fraction = 0.8;  // fraction of nearest-neighbor pairs kept

  int template_count() const;  // (max - min) / step + 1; defaults give 90
  void check_valid() const;
};

// Settings for the synthetic-matcher correspondence pipeline.
struct CorrespondenceConfig {
  int count = 200;
  double inlier_ratio = 0.7;
  double noise_sigma = 0.001;       // meters
  double ransac_threshold = 0.005;  // meters (~5 px at 0.8 m)
  int ransac_max_iterations = 200;

  void check_valid() const;
};

// Weighted least-squares rigid alignment: the transform minimizing
// sum w_i * |T * demo_i - test_i|^2. Weights default to 1. The rotation
// determinant is forced to +1 by flipping the smallest singular direction.
// Throws DegenerateGeometry on fewer than 3 pairs or collinear demo points.
Transform kabsch_svd(const std::vector<Correspondence>& pairs,
                     const std::vector<double>& weights = {});

// Hypothesize-and-verify outlier rejection: minimal 3-point alignments, the
// largest consensus set wins, then one all-inlier refit re-classifies.
// Returns sorted inlier indices; deterministic per seed. Throws
// DegenerateGeometry when no hypothesis reaches 3 inliers.
std::vector<int> ransac_filter(const std::vector<Correspondence>& pairs,
                               double inlier_threshold, int max_iterations,
                               std::uint64_t seed);

// ransac_filter then kabsch_svd on the surviving pairs. residual is the RMS
// inlier error; diagnostics carries the inlier count.
PoseEstimate estimate_from_correspondences(const ScenePair& pair,
                                           const std::vector<Correspondence>& matches,
                                           const CorrespondenceConfig& config,
                                           std::uint64_t seed);

// Centering heuristic: t = centroid(test) - rotation * centroid(demo), so
// [rotation | t] maps the demo centroid onto the test centroid.
Vec3 centering_translation(const PointCloud& demo_cloud, const PointCloud& test_cloud,
                           const Rotation& rotation);

struct IcpStepResult {
  Transform transform;
  double residual = 0.0;  // RMS over this step's matches, after the update
  int matched = 0;
};

// One point-to-point ICP step: match transformed source points to their
// nearest target neighbors within max_corr_dist, then compose one rigid
// update onto `current`. Throws DegenerateGeometry when nothing matches.
IcpStepResult icp_step(const PointCloud& source, const KdTree3& target_tree,
                       const Transform& current, double max_corr_dist);
IcpStepResult icp_step(const PointCloud& source, const PointCloud& target,
                       const Transform& current, double max_corr_dist);

// Multi-restart ICP between the pair's clouds. Restarts draw a rotation
// about the robot z-axis (mapped into the camera frame through the
// extrinsic), init the translation by centering plus Gaussian noise, and
// keep the restart with the lowest final residual (ties to the lower
// restart index). Bit-reproducible per seed under a count budget.
PoseEstimate icp_multirestart(const ScenePair& pair, const IcpConfig& config,
                              std::uint64_t seed);

// Template matching over a grid of robot-z rotations: each candidate pairs
// the conjugated rotation with the centering translation and scores by
// trimmed nearest-neighbor RMS (plus weighted mean color distance of the
// kept pairs in GeometryColor mode). Ties break toward smaller |angle|,
// then toward the positive angle.
PoseEstimate z_template_match(const ScenePair& pair, const TemplateConfig& config);

// Constrain an estimate to the tabletop motion family: re-express the delta
// in the robot frame, keep only its world-z rotation, shift the translation
// so the first transferred end-effector position is preserved, and map the
// result back to the camera frame. Idempotent; propagates
// DegenerateDecomposition from the gimbal band.
PoseEstimate apply_inductive_bias(const PoseEstimate& estimate, const Camera& camera,
                                  const Transform& first_demo_pose);

// String-addressable estimator registry for the CLI and config files.
// Base ids: "gt", "icp", "corr-svd", "template-z"; appending "+bias" wraps
// the base estimator in apply_inductive_bias.
struct EstimatorOptions {
  IcpConfig icp;
  TemplateConfig tmpl;
  CorrespondenceConfig corr;
  Transform first_demo_pose;  // robot-frame EEF pose used by "+bias"
};

using Estimator = std::function<PoseEstimate(const ScenePair&, std::uint64_t)>;

Estimator make_estimator(const std::string& id, const EstimatorOptions& options = {});
std::vector<std::string> estimator_ids();

}  // namespace ttx
