#pragma once

#include <cstdint>
#include <vector>

#include "ttx/scene.hpp"
#include "ttx/se3.hpp"
#include "ttx/trajectory.hpp"

namespace ttx {

// Which single input of the transfer pipeline receives the perturbation.
enum class NoiseTarget {
  CalibrationRotation,
  CalibrationTranslation,
  PoseRotation,
  PoseTranslation,
};

const char* to_string(NoiseTarget target);
NoiseTarget noise_target_from_string(const std::string& name);

// A perturbation of exact `magnitude` (radians for rotation targets, meters
// for translation targets) in a random direction.
struct NoiseSpec {
  NoiseTarget target = NoiseTarget::PoseTranslation;
  double magnitude = 0.0;

  void check_valid() const;
};

// Monte-Carlo grid for the noise sweep: end-effector-to-camera distances
// crossed with noise magnitudes, with random relative object deltas drawn
// per sample. Deterministic per seed.
struct SweepConfig {
  std::vector<double> distances_m = {0.2, 0.3, 0.4, 0.5, 0.6, 0.7,
                                     0.8, 0.9, 1.0, 1.1, 1.2};
  std::vector<double> magnitudes = {0.001, 0.002, 0.005, 0.01, 0.02, 0.05};
  int samples_per_cell = 1000;
  double delta_rotation_range = M_PI / 4.0;  // radians, delta rotation magnitude cap
  double delta_translation_range = 0.4;      // meters, delta translation cap
  Transform camera_extrinsic = default_camera().extrinsic;
  std::uint64_t seed = 0;

  void check_valid() const;
};

// Per-cell aggregate of propagated end-effector start errors.
struct SweepCell {
  double distance_m = 0.0;
  double magnitude = 0.0;
  double mean_translation_err_m = 0.0;
  double std_translation_err_m = 0.0;
  double mean_rotation_err_rad = 0.0;
  double std_rotation_err_rad = 0.0;
};

// Piecewise-bilinear surface mapping (camera distance, mean eef position
// error) to the noise magnitude that produces it. Rows along the error axis
// are isotonic (non-decreasing) by construction.
struct ErrorMap {
  std::vector<double> distance_knots;
  std::vector<double> error_knots;
  std::vector<double> values;  // row-major [distance][error]

  struct Eval {
    double magnitude = 0.0;
    bool clamped = false;  // query fell outside the fitted domain
  };
  Eval evaluate(double distance_m, double eef_error_m) const;

  double& at(std::size_t d, std::size_t e) { return values[d * error_knots.size() + e]; }
  double at(std::size_t d, std::size_t e) const { return values[d * error_knots.size() + e]; }
};

// Empirical task success rate as a function of starting end-effector
// position error. Error column strictly increasing; lookups interpolate
// linearly and clamp at both ends.
struct SuccessProfile {
  std::vector<double> eef_error_m;
  std::vector<double> success_rate;

  void check_valid() const;
  double interpolate(double error_m) const;
};

// Synthetic stand-in profile (a falling sigmoid); real success data is not
// bundled, so this is explicitly a labeled fixture, not a measurement.
SuccessProfile synthetic_sigmoid_profile(double error_at_half_m, double width_m,
                                         int points = 25);

struct SuccessCurvePoint {
  double magnitude = 0.0;
  double expected_success = 0.0;
};

// Propagate one perturbation through trajectory transfer: compute the test
// end-effector pose with clean inputs and again with the single perturbed
// input, and return the start-pose discrepancy. Exact-magnitude noise in a
// random direction, deterministic per seed.
EefError propagate_noise(const Transform& t_rc, const Transform& demo_pose,
                         const Transform& delta, const NoiseSpec& noise, std::uint64_t seed);

// Monte-Carlo sweep over the (distance, magnitude) grid; cells are emitted
// distance-major in grid order. Per-sample seeds derive from
// (seed, cell index, sample index), so results do not depend on scheduling.
std::vector<SweepCell> run_sweep(const SweepConfig& config, NoiseTarget target);

// Least-squares piecewise-bilinear fit of magnitude over (distance, mean
// eef position error), then isotonic correction along the error axis.
// Throws DegenerateGeometry unless the table spans both axes with >= 4 cells.
ErrorMap fit_error_map(const std::vector<SweepCell>& samples);

// Forward Monte-Carlo success remapping: for each magnitude, average the
// profile lookup over propagated position errors at the given camera
// distance, then smooth to a non-increasing curve.
std::vector<SuccessCurvePoint> map_success_curve(const SuccessProfile& profile,
                                                 NoiseTarget target, double distance_m,
                                                 const std::vector<double>& magnitudes,
                                                 int samples, std::uint64_t seed);

// Fitted-map alternative to the forward route: invert the error map at the
// given distance (smallest error whose magnitude reaches the query) and look
// the resulting error up in the profile.
std::vector<SuccessCurvePoint> success_curve_from_error_map(
    const SuccessProfile& profile, const ErrorMap& map, double distance_m,
    const std::vector<double>& magnitudes);

}  // namespace ttx
