#include "ttx/estimators.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

#include <Eigen/Dense>

#include "ttx/errors.hpp"
#include "ttx/random.hpp"
#include "ttx/trajectory.hpp"

namespace ttx {

namespace {

// Unchecked weighted Kabsch core. Rank-deficient inputs are legal here: the
// SVD then leaves the undetermined rotation directions at identity, which is
// exactly what an ICP update with too few matches should do. The public
// kabsch_svd adds the precondition checks.
Transform kabsch_core(const std::vector<Correspondence>& pairs,
                      const std::vector<double>& weights) {
  double total = 0.0;
  Vec3 demo_mean = Vec3::Zero();
  Vec3 test_mean = Vec3::Zero();
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const double w = weights.empty() ? 1.0 : weights[i];
    demo_mean += w * pairs[i].demo;
    test_mean += w * pairs[i].test;
    total += w;
  }
  demo_mean /= total;
  test_mean /= total;

  Eigen::Matrix3d h = Eigen::Matrix3d::Zero();
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const double w = weights.empty() ? 1.0 : weights[i];
    h += w * (pairs[i].demo - demo_mean) * (pairs[i].test - test_mean).transpose();
  }

  Eigen::JacobiSVD<Eigen::Matrix3d> svd(h, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Eigen::Matrix3d& u = svd.matrixU();
  const Eigen::Matrix3d& v = svd.matrixV();
  Vec3 d(1.0, 1.0, 1.0);
  if ((v * u.transpose()).determinant() < 0.0) d.z() = -1.0;
  Transform out;
  out.rotation = v * d.asDiagonal() * u.transpose();
  out.translation = test_mean - out.rotation * demo_mean;
  return out;
}

double rms_error(const std::vector<Correspondence>& pairs, const Transform& t) {
  double sq = 0.0;
  for (const auto& c : pairs) sq += (t.rotation * c.demo + t.translation - c.test).squaredNorm();
  return std::sqrt(sq / static_cast<double>(pairs.size()));
}

// Rotation about the robot z-axis re-expressed in the camera frame.
Rotation robot_z_in_camera(const Camera& camera, double angle) {
  const Rotation& r_rc = camera.extrinsic.rotation;
  return r_rc.transpose() * rotation_about_z(angle) * r_rc;
}

}  // namespace

void IcpConfig::check_valid() const {
  if (max_correspondence_distance <= 0.0)
    throw ConfigError("IcpConfig: max_correspondence_distance must be positive");
  if (max_iterations_per_restart <= 0)
    throw ConfigError("IcpConfig: max_iterations_per_restart must be positive");
  if (budget.count < 0) throw ConfigError("IcpConfig: restart count must be non-negative");
  if (budget.count == 0 && budget.wall_time_s <= 0.0)
    throw ConfigError("IcpConfig: wall-time budget must be positive");
  if (init_translation_sigma < 0.0)
    throw ConfigError("IcpConfig: init_translation_sigma must be non-negative");
  if (init_max_z_rotation <= 0.0 || init_max_z_rotation > M_PI)
    throw ConfigError("IcpConfig: init_max_z_rotation must be in (0, pi]");
}

int TemplateConfig::template_count() const {
  return static_cast<int>(std::llround((angle_max_deg - angle_min_deg) / angle_step_deg)) + 1;
}

void TemplateConfig::check_valid() const {
  if (angle_step_deg <= 0.0) throw ConfigError("TemplateConfig: angle step must be positive");
  if (angle_max_deg < angle_min_deg)
    throw ConfigError("TemplateConfig: angle range is inverted");
  const double steps = (angle_max_deg - angle_min_deg) / angle_step_deg;
  if (std::abs(steps - std::llround(steps)) > 1e-9)
    throw ConfigError("TemplateConfig: angle range is not a whole number of steps");
  if (color_weight < 0.0) throw ConfigError("TemplateConfig: color_weight must be non-negative");
  if (trim_fraction <= 0.0 || trim_fraction > 1.0)
    throw ConfigError("TemplateConfig: trim_fraction must be in (0, 1]");
}

void CorrespondenceConfig::check_valid() const {
  if (count < 3) throw ConfigError("CorrespondenceConfig: need at least 3 correspondences");
  if (inlier_ratio <= 0.0 || inlier_ratio > 1.0)
    throw ConfigError("CorrespondenceConfig: inlier_ratio must be in (0, 1]");
  if (noise_sigma < 0.0) throw ConfigError("CorrespondenceConfig: noise_sigma must be non-negative");
  if (ransac_threshold <= 0.0)
    throw ConfigError("CorrespondenceConfig: ransac_threshold must be positive");
  if (ransac_max_iterations <= 0)
    throw ConfigError("CorrespondenceConfig: ransac_max_iterations must be positive");
}

Transform kabsch_svd(const std::vector<Correspondence>& pairs,
                     const std::vector<double>& weights) {
  if (pairs.size() < 3) throw DegenerateGeometry("kabsch_svd: need at least 3 pairs");
  if (!weights.empty()) {
    if (weights.size() != pairs.size())
      throw ConfigError("kabsch_svd: weights must match pairs");
    double total = 0.0;
    for (double w : weights) {
      if (w < 0.0) throw ConfigError("kabsch_svd: weights must be non-negative");
      total += w;
    }
    if (total <= 0.0) throw ConfigError("kabsch_svd: weights sum to zero");
  }

  // Collinear (or coincident) demo points leave a free rotation about the
  // line; detect via the demo-side scatter rank and refuse to guess.
  double total = 0.0;
  Vec3 mean = Vec3::Zero();
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const double w = weights.empty() ? 1.0 : weights[i];
    mean += w * pairs[i].demo;
    total += w;
  }
  mean /= total;
  Eigen::Matrix3d scatter = Eigen::Matrix3d::Zero();
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const double w = weights.empty() ? 1.0 : weights[i];
    const Vec3 p = pairs[i].demo - mean;
    scatter += w * p * p.transpose();
  }
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(scatter);
  const Vec3 sigma = svd.singularValues();
  if (sigma(1) <= 1e-9 * sigma(0) || sigma(0) == 0.0)
    throw DegenerateGeometry("kabsch_svd: demo points are collinear");

  return kabsch_core(pairs, weights);
}

std::vector<int> ransac_filter(const std::vector<Correspondence>& pairs,
                               double inlier_threshold, int max_iterations,
                               std::uint64_t seed) {
  if (pairs.size() < 3) throw DegenerateGeometry("ransac_filter: need at least 3 pairs");
  if (inlier_threshold <= 0.0) throw ConfigError("ransac_filter: threshold must be positive");
  if (max_iterations <= 0) throw ConfigError("ransac_filter: max_iterations must be positive");

  const int n = static_cast<int>(pairs.size());
  Rng rng = make_rng(mix_seed(seed, 0x5a17));

  const auto classify = [&](const Transform& t) {
    std::vector<int> inliers;
    for (int i = 0; i < n; ++i) {
      const auto& c = pairs[static_cast<std::size_t>(i)];
      if ((t.rotation * c.demo + t.translation - c.test).norm() <= inlier_threshold)
        inliers.push_back(i);
    }
    return inliers;
  };

  std::vector<int> best;
  for (int iter = 0; iter < max_iterations; ++iter) {
    const std::vector<int> idx = sample_distinct(rng, n, 3);
    std::vector<Correspondence> minimal;
    for (int i : idx) minimal.push_back(pairs[static_cast<std::size_t>(i)]);
    Transform hypothesis;
    try {
      hypothesis = kabsch_svd(minimal);
    } catch (const DegenerateGeometry&) {
      continue;  // collinear sample, draw again
    }
    std::vector<int> inliers = classify(hypothesis);
    if (inliers.size() > best.size()) best = std::move(inliers);
    if (static_cast<int>(best.size()) == n) break;
  }
  if (best.size() < 3) throw DegenerateGeometry("ransac_filter: no consensus of 3 inliers");

  // One all-inlier refit, then re-classify against the refined transform.
  std::vector<Correspondence> consensus;
  for (int i : best) consensus.push_back(pairs[static_cast<std::size_t>(i)]);
  try {
    const std::vector<int> refined = classify(kabsch_svd(consensus));
    if (refined.size() >= 3) return refined;
  } catch (const DegenerateGeometry&) {
  }
  return best;
}

PoseEstimate estimate_from_correspondences(const ScenePair& pair,
                                           const std::vector<Correspondence>& matches,
                                           const CorrespondenceConfig& config,
                                           std::uint64_t seed) {
  (void)pair;
  config.check_valid();
  if (matches.size() < 3)
    throw DegenerateGeometry("estimate_from_correspondences: need at least 3 matches");

  const std::vector<int> inliers =
      ransac_filter(matches, config.ransac_threshold, config.ransac_max_iterations, seed);
  std::vector<Correspondence> kept;
  kept.reserve(inliers.size());
  for (int i : inliers) kept.push_back(matches[static_cast<std::size_t>(i)]);

  PoseEstimate est;
  est.delta_camera = kabsch_svd(kept);
  est.residual = rms_error(kept, est.delta_camera);
  est.diagnostics["inlier-count"] = static_cast<std::int64_t>(inliers.size());
  return est;
}

Vec3 centering_translation(const PointCloud& demo_cloud, const PointCloud& test_cloud,
                           const Rotation& rotation) {
  if (demo_cloud.empty() || test_cloud.empty())
    throw DegenerateGeometry("centering_translation: empty cloud");
  return centroid(test_cloud) - rotation * centroid(demo_cloud);
}

IcpStepResult icp_step(const PointCloud& source, const KdTree3& target_tree,
                       const Transform& current, double max_corr_dist) {
  if (source.empty()) throw DegenerateGeometry("icp_step: empty source cloud");
  if (max_corr_dist <= 0.0) throw ConfigError("icp_step: max_corr_dist must be positive");

  std::vector<Correspondence> matched;
  for (const auto& s : source.points) {
    const Vec3 x = current.rotation * s + current.translation;
    const auto hit = target_tree.nearest(x, max_corr_dist);
    if (hit.found()) matched.push_back({x, target_tree.point(hit.index)});
  }
  if (matched.empty()) throw DegenerateGeometry("icp_step: no matches within distance cap");

  // The update aligns already-transformed points, so underdetermined matches
  // keep the current rotation instead of resetting it.
  const Transform update = kabsch_core(matched, {});
  IcpStepResult out;
  out.transform = compose(update, current);
  out.residual = rms_error(matched, update);
  out.matched = static_cast<int>(matched.size());
  return out;
}

IcpStepResult icp_step(const PointCloud& source, const PointCloud& target,
                       const Transform& current, double max_corr_dist) {
  if (target.empty()) throw DegenerateGeometry("icp_step: empty target cloud");
  return icp_step(source, KdTree3(target.points), current, max_corr_dist);
}

PoseEstimate icp_multirestart(const ScenePair& pair, const IcpConfig& config,
                              std::uint64_t seed) {
  config.check_valid();
  if (pair.demo_cloud.empty() || pair.test_cloud.empty())
    throw DegenerateGeometry("icp_multirestart: empty cloud");

  const KdTree3 test_tree(pair.test_cloud.points);
  const auto start_time = std::chrono::steady_clock::now();
  const auto within_budget = [&](int restart) {
    if (config.budget.count > 0) return restart < config.budget.count;
    if (restart == 0) return true;  // always try at least one
    const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start_time;
    return elapsed.count() < config.budget.wall_time_s;
  };

  Transform best_transform;
  double best_residual = std::numeric_limits<double>::infinity();
  std::int64_t best_restart = -1;
  std::int64_t total_iterations = 0;
  int restart = 0;
  for (; within_budget(restart); ++restart) {
    Transform current;
    if (restart == 0 && config.initial_guess) {
      current = *config.initial_guess;
    } else {
      // Seeded per restart index so results are independent of scheduling.
      Rng rng = make_rng(mix_seed(seed, static_cast<std::uint64_t>(restart), 0x1c70));
      Rotation rot;
      if (config.z_rotation_prior) {
        const double u =
            uniform_real(rng, -config.init_max_z_rotation, config.init_max_z_rotation);
        rot = robot_z_in_camera(pair.camera, u);
      } else {
        rot = random_orientation(rng);
      }
      current.rotation = rot;
      current.translation = centering_translation(pair.demo_cloud, pair.test_cloud, rot) +
                            gaussian3(rng, config.init_translation_sigma);
    }

    double residual = std::numeric_limits<double>::infinity();
    bool ok = false;
    for (int it = 0; it < config.max_iterations_per_restart; ++it) {
      IcpStepResult step;
      try {
        step = icp_step(pair.demo_cloud, test_tree, current,
                        config.max_correspondence_distance);
      } catch (const DegenerateGeometry&) {
        break;  // restart diverged out of correspondence range
      }
      current = step.transform;
      ++total_iterations;
      ok = true;
      const bool plateaued = std::abs(residual - step.residual) < 1e-12;
      residual = step.residual;
      if (plateaued) break;
    }
    if (ok && residual < best_residual) {
      best_residual = residual;
      best_transform = current;
      best_restart = restart;
    }
  }
  if (best_restart < 0)
    throw DegenerateGeometry("icp_multirestart: every restart failed to match");

  PoseEstimate est;
  est.delta_camera.rotation = orthonormalized(best_transform.rotation);
  est.delta_camera.translation = best_transform.translation;
  est.residual = best_residual;
  est.diagnostics["restarts-tried"] = restart;
  est.diagnostics["iterations"] = total_iterations;
  est.diagnostics["best-restart"] = best_restart;
  return est;
}

PoseEstimate z_template_match(const ScenePair& pair, const TemplateConfig& config) {
  config.check_valid();
  if (pair.demo_cloud.empty() || pair.test_cloud.empty())
    throw DegenerateGeometry("z_template_match: empty cloud");

  const KdTree3 test_tree(pair.test_cloud.points);
  const Vec3 demo_mean = centroid(pair.demo_cloud);
  const Vec3 test_mean = centroid(pair.test_cloud);
  const bool use_color = config.score == TemplateScore::GeometryColor &&
                         pair.demo_cloud.has_colors() && pair.test_cloud.has_colors();

  const std::size_t n = pair.demo_cloud.size();
  const std::size_t keep =
      std::max<std::size_t>(1, static_cast<std::size_t>(
                                   std::ceil(config.trim_fraction * static_cast<double>(n))));

  struct Match {
    double sq_dist;
    std::size_t demo_index;
    int test_index;
  };
  std::vector<Match> matches(n);

  double best_score = std::numeric_limits<double>::infinity();
  double best_angle = 0.0;
  Transform best_delta;
  const int count = config.template_count();
  for (int k = 0; k < count; ++k) {
    const double angle_deg = config.angle_min_deg + k * config.angle_step_deg;
    const Rotation rot = robot_z_in_camera(pair.camera, angle_deg * M_PI / 180.0);
    const Vec3 t = test_mean - rot * demo_mean;

    for (std::size_t i = 0; i < n; ++i) {
      const Vec3 x = rot * pair.demo_cloud.points[i] + t;
      const auto hit = test_tree.nearest(x);
      matches[i] = {hit.sq_dist, i, hit.index};
    }
    // Trim to the best-aligned fraction; index tiebreak keeps the selection
    // deterministic when distances collide.
    std::sort(matches.begin(), matches.end(), [](const Match& a, const Match& b) {
      if (a.sq_dist != b.sq_dist) return a.sq_dist < b.sq_dist;
      return a.demo_index < b.demo_index;
    });

    double sq = 0.0;
    double color_dist = 0.0;
    for (std::size_t i = 0; i < keep; ++i) {
      sq += matches[i].sq_dist;
      if (use_color) {
        color_dist += (pair.demo_cloud.colors[matches[i].demo_index] -
                       pair.test_cloud.colors[static_cast<std::size_t>(matches[i].test_index)])
                          .norm();
      }
    }
    double score = std::sqrt(sq / static_cast<double>(keep));
    if (use_color) score += config.color_weight * color_dist / static_cast<double>(keep);

    const bool better =
        score < best_score ||
        (score == best_score && (std::abs(angle_deg) < std::abs(best_angle) ||
                                 (std::abs(angle_deg) == std::abs(best_angle) &&
                                  angle_deg > best_angle)));
    if (better) {
      best_score = score;
      best_angle = angle_deg;
      best_delta = {rot, t};
    }
  }

  PoseEstimate est;
  est.delta_camera = best_delta;
  est.residual = best_score;
  est.diagnostics["templates-evaluated"] = count;
  return est;
}

PoseEstimate apply_inductive_bias(const PoseEstimate& estimate, const Camera& camera,
                                  const Transform& first_demo_pose) {
  const Transform delta_robot = change_delta_frame(camera.extrinsic, estimate.delta_camera);
  const Transform adjusted = adjust_delta_translation(delta_robot, first_demo_pose);
  PoseEstimate out = estimate;
  out.delta_camera = change_delta_frame(inverse(camera.extrinsic), adjusted);
  return out;
}

Estimator make_estimator(const std::string& id, const EstimatorOptions& options) {
  static const std::string suffix = "+bias";
  if (id.size() > suffix.size() && id.ends_with(suffix)) {
    const Estimator base = make_estimator(id.substr(0, id.size() - suffix.size()), options);
    const Transform first_demo_pose = options.first_demo_pose;
    return [base, first_demo_pose](const ScenePair& pair, std::uint64_t seed) {
      return apply_inductive_bias(base(pair, seed), pair.camera, first_demo_pose);
    };
  }
  if (id == "gt") {
    return [](const ScenePair& pair, std::uint64_t) {
      PoseEstimate est;
      est.delta_camera = pair.true_delta_camera;
      return est;
    };
  }
  if (id == "icp") {
    const IcpConfig config = options.icp;
    return [config](const ScenePair& pair, std::uint64_t seed) {
      return icp_multirestart(pair, config, seed);
    };
  }
  if (id == "corr-svd") {
    const CorrespondenceConfig config = options.corr;
    return [config](const ScenePair& pair, std::uint64_t seed) {
      const CorrespondenceSet matches =
          make_correspondences(pair, config.count, config.inlier_ratio, config.noise_sigma,
                               mix_seed(seed, 0x6d61));
      return estimate_from_correspondences(pair, matches.pairs, config, mix_seed(seed, 0x7261));
    };
  }
  if (id == "template-z") {
    const TemplateConfig config = options.tmpl;
    return [config](const ScenePair& pair, std::uint64_t) {
      return z_template_match(pair, config);
    };
  }
  throw ConfigError("unknown estimator id: " + id);
}

std::vector<std::string> estimator_ids() {
  return {"gt",      "icp",      "corr-svd",      "template-z",
          "gt+bias", "icp+bias", "corr-svd+bias", "template-z+bias"};
}

}  // namespace ttx
