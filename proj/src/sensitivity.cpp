#include "ttx/sensitivity.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <utility>

#include "ttx/errors.hpp"
#include "ttx/random.hpp"

namespace ttx {
namespace {

// Weighted pool-adjacent-violators; rewrites `v` with its best non-decreasing
// approximation (least squares, equal weights).
void isotonic_non_decreasing(std::vector<double>& v) {
  struct Block {
    double mean;
    double weight;
  };
  std::vector<Block> blocks;
  blocks.reserve(v.size());
  for (double x : v) {
    blocks.push_back({x, 1.0});
    while (blocks.size() >= 2) {
      Block& prev = blocks[blocks.size() - 2];
      Block& last = blocks.back();
      if (prev.mean <= last.mean) break;
      prev.mean = (prev.mean * prev.weight + last.mean * last.weight) / (prev.weight + last.weight);
      prev.weight += last.weight;
      blocks.pop_back();
    }
  }
  std::size_t i = 0;
  for (const Block& b : blocks) {
    for (double w = 0; w < b.weight - 0.5; w += 1.0) v[i++] = b.mean;
  }
}

void isotonic_non_increasing(std::vector<double>& v) {
  for (double& x : v) x = -x;
  isotonic_non_decreasing(v);
  for (double& x : v) x = -x;
}

// Hat-function weight of a query inside a knot sequence: the two bracketing
// knot indices and the interpolation fraction, with clamping to the domain.
struct KnotSpan {
  std::size_t lo = 0;
  std::size_t hi = 0;
  double frac = 0.0;
  bool clamped = false;
};

KnotSpan locate(const std::vector<double>& knots, double x) {
  KnotSpan span;
  if (x <= knots.front()) {
    span.lo = span.hi = 0;
    span.clamped = x < knots.front();
    return span;
  }
  if (x >= knots.back()) {
    span.lo = span.hi = knots.size() - 1;
    span.clamped = x > knots.back();
    return span;
  }
  const auto it = std::upper_bound(knots.begin(), knots.end(), x);
  span.hi = static_cast<std::size_t>(it - knots.begin());
  span.lo = span.hi - 1;
  span.frac = (x - knots[span.lo]) / (knots[span.hi] - knots[span.lo]);
  return span;
}

// One random transfer scenario: demo end-effector pose on the sphere of the
// given radius around the camera center (restricted to the half-space the
// camera looks into) plus a random camera-frame object delta.
struct Scenario {
  Transform demo_pose;
  Transform delta;
};

Scenario sample_scenario(Rng& rng, const Transform& t_rc, double distance_m,
                         double rotation_range, double translation_range) {
  Scenario s;
  s.demo_pose.rotation = random_orientation(rng);
  Vec3 dir = random_unit_vector(rng);
  const Vec3 forward = t_rc.rotation.col(2);
  if (dir.dot(forward) < 0.0) dir = -dir;
  s.demo_pose.translation = t_rc.translation + distance_m * dir;
  s.delta.rotation = random_rotation(uniform_real(rng, 0.0, rotation_range), rng);
  s.delta.translation = uniform_real(rng, 0.0, translation_range) * random_unit_vector(rng);
  return s;
}

}  // namespace

const char* to_string(NoiseTarget target) {
  switch (target) {
    case NoiseTarget::CalibrationRotation:
      return "calibration-rotation";
    case NoiseTarget::CalibrationTranslation:
      return "calibration-translation";
    case NoiseTarget::PoseRotation:
      return "pose-rotation";
    case NoiseTarget::PoseTranslation:
      return "pose-translation";
  }
  throw ConfigError("unknown noise target");
}

NoiseTarget noise_target_from_string(const std::string& name) {
  if (name == "calibration-rotation") return NoiseTarget::CalibrationRotation;
  if (name == "calibration-translation") return NoiseTarget::CalibrationTranslation;
  if (name == "pose-rotation") return NoiseTarget::PoseRotation;
  if (name == "pose-translation") return NoiseTarget::PoseTranslation;
  throw ConfigError("unknown noise target: " + name);
}

void NoiseSpec::check_valid() const {
  if (!(magnitude >= 0.0)) throw ConfigError("noise magnitude must be >= 0");
}

void SweepConfig::check_valid() const {
  if (distances_m.empty()) throw ConfigError("sweep needs at least one distance");
  if (magnitudes.empty()) throw ConfigError("sweep needs at least one magnitude");
  for (double d : distances_m) {
    if (!(d > 0.0)) throw ConfigError("sweep distances must be > 0");
  }
  for (double m : magnitudes) {
    if (!(m >= 0.0)) throw ConfigError("sweep magnitudes must be >= 0");
  }
  if (samples_per_cell < 1) throw ConfigError("sweep needs samples_per_cell >= 1");
  if (!(delta_rotation_range >= 0.0) || !(delta_translation_range >= 0.0)) {
    throw ConfigError("delta ranges must be >= 0");
  }
  if (!is_rotation(camera_extrinsic.rotation)) {
    throw ConfigError("camera extrinsic rotation is not orthonormal");
  }
}

EefError propagate_noise(const Transform& t_rc, const Transform& demo_pose,
                         const Transform& delta, const NoiseSpec& noise, std::uint64_t seed) {
  noise.check_valid();
  Rng rng = make_rng(mix_seed(seed, static_cast<std::uint64_t>(noise.target) + 0x6e73));

  Transform noisy_rc = t_rc;
  Transform noisy_delta = delta;
  switch (noise.target) {
    case NoiseTarget::CalibrationRotation:
      // Perturb the extrinsic orientation only; the camera center stays put,
      // so the induced error pivots about the camera.
      noisy_rc.rotation = random_rotation(noise.magnitude, rng) * t_rc.rotation;
      break;
    case NoiseTarget::CalibrationTranslation:
      noisy_rc.translation += noise.magnitude * random_unit_vector(rng);
      break;
    case NoiseTarget::PoseRotation:
      noisy_delta.rotation = random_rotation(noise.magnitude, rng) * delta.rotation;
      break;
    case NoiseTarget::PoseTranslation:
      noisy_delta.translation += noise.magnitude * random_unit_vector(rng);
      break;
  }

  const Transform truth = compose(change_delta_frame(t_rc, delta), demo_pose);
  const Transform perturbed = compose(change_delta_frame(noisy_rc, noisy_delta), demo_pose);
  return eef_start_error(truth, perturbed);
}

std::vector<SweepCell> run_sweep(const SweepConfig& config, NoiseTarget target) {
  config.check_valid();
  std::vector<SweepCell> out;
  out.reserve(config.distances_m.size() * config.magnitudes.size());

  const std::size_t n = static_cast<std::size_t>(config.samples_per_cell);
  std::vector<double> t_err(n);
  std::vector<double> r_err(n);

  std::uint64_t cell_index = 0;
  for (double distance : config.distances_m) {
    for (double magnitude : config.magnitudes) {
      // Per-sample seeds keep the draw independent of iteration scheduling;
      // the reductions below run in sample-index order.
      for (std::size_t i = 0; i < n; ++i) {
        const std::uint64_t sample_seed = mix_seed(config.seed, cell_index, i);
        Rng rng = make_rng(sample_seed);
        const Scenario s = sample_scenario(rng, config.camera_extrinsic, distance,
                                           config.delta_rotation_range,
                                           config.delta_translation_range);
        const EefError err = propagate_noise(config.camera_extrinsic, s.demo_pose, s.delta,
                                             {target, magnitude}, mix_seed(sample_seed, 0x70));
        t_err[i] = err.translation_m;
        r_err[i] = err.rotation_rad;
      }

      SweepCell cell;
      cell.distance_m = distance;
      cell.magnitude = magnitude;
      double t_sum = 0.0, r_sum = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        t_sum += t_err[i];
        r_sum += r_err[i];
      }
      cell.mean_translation_err_m = t_sum / static_cast<double>(n);
      cell.mean_rotation_err_rad = r_sum / static_cast<double>(n);
      double t_sq = 0.0, r_sq = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        t_sq += (t_err[i] - cell.mean_translation_err_m) * (t_err[i] - cell.mean_translation_err_m);
        r_sq += (r_err[i] - cell.mean_rotation_err_rad) * (r_err[i] - cell.mean_rotation_err_rad);
      }
      cell.std_translation_err_m = std::sqrt(t_sq / static_cast<double>(n));
      cell.std_rotation_err_rad = std::sqrt(r_sq / static_cast<double>(n));
      out.push_back(cell);
      ++cell_index;
    }
  }
  return out;
}

ErrorMap::Eval ErrorMap::evaluate(double distance_m, double eef_error_m) const {
  const KnotSpan d = locate(distance_knots, distance_m);
  const KnotSpan e = locate(error_knots, eef_error_m);
  const double top = at(d.lo, e.lo) * (1.0 - e.frac) + at(d.lo, e.hi) * e.frac;
  const double bot = at(d.hi, e.lo) * (1.0 - e.frac) + at(d.hi, e.hi) * e.frac;
  Eval result;
  result.magnitude = top * (1.0 - d.frac) + bot * d.frac;
  result.clamped = d.clamped || e.clamped;
  return result;
}

ErrorMap fit_error_map(const std::vector<SweepCell>& samples) {
  std::vector<double> distances;
  double err_min = std::numeric_limits<double>::infinity();
  double err_max = -err_min;
  for (const SweepCell& c : samples) {
    distances.push_back(c.distance_m);
    err_min = std::min(err_min, c.mean_translation_err_m);
    err_max = std::max(err_max, c.mean_translation_err_m);
  }
  std::sort(distances.begin(), distances.end());
  distances.erase(std::unique(distances.begin(), distances.end()), distances.end());

  std::vector<double> magnitudes;
  for (const SweepCell& c : samples) magnitudes.push_back(c.magnitude);
  std::sort(magnitudes.begin(), magnitudes.end());
  magnitudes.erase(std::unique(magnitudes.begin(), magnitudes.end()), magnitudes.end());

  if (samples.size() < 4 || distances.size() < 2 || !(err_max > err_min)) {
    throw DegenerateGeometry("error-map fit needs >= 4 cells spanning both axes");
  }

  ErrorMap map;
  map.distance_knots = distances;
  const std::size_t num_err = std::clamp<std::size_t>(magnitudes.size(), 2, 12);
  map.error_knots.resize(num_err);
  for (std::size_t k = 0; k < num_err; ++k) {
    map.error_knots[k] =
        err_min + (err_max - err_min) * static_cast<double>(k) / static_cast<double>(num_err - 1);
  }

  // Least squares over the bilinear node values. A light second-difference
  // penalty ties nodes with no sample support to their neighbours (it
  // vanishes on surfaces linear in the knot index, so exact linear data is
  // reproduced exactly), plus a tiny ridge for isolated null directions.
  const std::size_t nd = map.distance_knots.size();
  const std::size_t ne = map.error_knots.size();
  const std::size_t dim = nd * ne;
  Eigen::MatrixXd normal = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(dim),
                                                 static_cast<Eigen::Index>(dim));
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dim));
  const auto node = [&](std::size_t d, std::size_t e) {
    return static_cast<Eigen::Index>(d * ne + e);
  };

  for (const SweepCell& c : samples) {
    const KnotSpan d = locate(map.distance_knots, c.distance_m);
    const KnotSpan e = locate(map.error_knots, c.mean_translation_err_m);
    const std::pair<Eigen::Index, double> terms[4] = {
        {node(d.lo, e.lo), (1.0 - d.frac) * (1.0 - e.frac)},
        {node(d.lo, e.hi), (1.0 - d.frac) * e.frac},
        {node(d.hi, e.lo), d.frac * (1.0 - e.frac)},
        {node(d.hi, e.hi), d.frac * e.frac},
    };
    for (const auto& [i, wi] : terms) {
      if (wi == 0.0) continue;
      rhs(i) += wi * c.magnitude;
      for (const auto& [j, wj] : terms) {
        if (wj != 0.0) normal(i, j) += wi * wj;
      }
    }
  }

  const double scale = normal.trace() / static_cast<double>(dim);
  const double smooth = 1e-6 * scale;
  const auto add_second_difference = [&](Eigen::Index a, Eigen::Index b, Eigen::Index c) {
    const Eigen::Index idx[3] = {a, b, c};
    const double w[3] = {1.0, -2.0, 1.0};
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) normal(idx[i], idx[j]) += smooth * w[i] * w[j];
    }
  };
  for (std::size_t d = 0; d < nd; ++d) {
    for (std::size_t e = 1; e + 1 < ne; ++e) {
      add_second_difference(node(d, e - 1), node(d, e), node(d, e + 1));
    }
  }
  for (std::size_t e = 0; e < ne; ++e) {
    for (std::size_t d = 1; d + 1 < nd; ++d) {
      add_second_difference(node(d - 1, e), node(d, e), node(d + 1, e));
    }
  }
  normal.diagonal().array() += 1e-12 * std::max(scale, 1.0);

  const Eigen::VectorXd solution = normal.ldlt().solve(rhs);
  map.values.assign(solution.data(), solution.data() + dim);

  for (std::size_t d = 0; d < nd; ++d) {
    std::vector<double> row(map.values.begin() + static_cast<std::ptrdiff_t>(d * ne),
                            map.values.begin() + static_cast<std::ptrdiff_t>((d + 1) * ne));
    isotonic_non_decreasing(row);
    std::copy(row.begin(), row.end(), map.values.begin() + static_cast<std::ptrdiff_t>(d * ne));
  }
  return map;
}

void SuccessProfile::check_valid() const {
  if (eef_error_m.empty() || eef_error_m.size() != success_rate.size()) {
    throw ConfigError("success profile needs matching, non-empty columns");
  }
  for (std::size_t i = 0; i < eef_error_m.size(); ++i) {
    if (!(eef_error_m[i] >= 0.0)) throw ConfigError("success profile errors must be >= 0");
    if (i > 0 && !(eef_error_m[i] > eef_error_m[i - 1])) {
      throw ConfigError("success profile errors must be strictly increasing");
    }
    if (!(success_rate[i] >= 0.0) || !(success_rate[i] <= 1.0)) {
      throw ConfigError("success rates must lie in [0, 1]");
    }
  }
}

double SuccessProfile::interpolate(double error_m) const {
  const KnotSpan span = locate(eef_error_m, error_m);
  return success_rate[span.lo] * (1.0 - span.frac) + success_rate[span.hi] * span.frac;
}

SuccessProfile synthetic_sigmoid_profile(double error_at_half_m, double width_m, int points) {
  if (!(error_at_half_m > 0.0) || !(width_m > 0.0) || points < 2) {
    throw ConfigError("sigmoid profile needs positive center, width and >= 2 points");
  }
  SuccessProfile profile;
  const double span = 3.0 * error_at_half_m;
  for (int i = 0; i < points; ++i) {
    const double e = span * static_cast<double>(i) / static_cast<double>(points - 1);
    profile.eef_error_m.push_back(e);
    profile.success_rate.push_back(1.0 / (1.0 + std::exp((e - error_at_half_m) / width_m)));
  }
  return profile;
}

std::vector<SuccessCurvePoint> map_success_curve(const SuccessProfile& profile,
                                                 NoiseTarget target, double distance_m,
                                                 const std::vector<double>& magnitudes,
                                                 int samples, std::uint64_t seed) {
  profile.check_valid();
  if (magnitudes.empty()) throw ConfigError("success curve needs at least one magnitude");
  if (!(distance_m > 0.0)) throw ConfigError("success curve distance must be > 0");
  if (samples < 1) throw ConfigError("success curve needs samples >= 1");

  const SweepConfig defaults;  // delta ranges and camera shared with the sweep
  std::vector<double> success(magnitudes.size(), 0.0);
  for (std::size_t mi = 0; mi < magnitudes.size(); ++mi) {
    double sum = 0.0;
    for (int i = 0; i < samples; ++i) {
      const std::uint64_t sample_seed = mix_seed(seed, mi, static_cast<std::uint64_t>(i));
      Rng rng = make_rng(sample_seed);
      const Scenario s = sample_scenario(rng, defaults.camera_extrinsic, distance_m,
                                         defaults.delta_rotation_range,
                                         defaults.delta_translation_range);
      const EefError err = propagate_noise(defaults.camera_extrinsic, s.demo_pose, s.delta,
                                           {target, magnitudes[mi]}, mix_seed(sample_seed, 0x70));
      sum += profile.interpolate(err.translation_m);
    }
    success[mi] = sum / static_cast<double>(samples);
  }
  isotonic_non_increasing(success);

  std::vector<SuccessCurvePoint> curve(magnitudes.size());
  for (std::size_t mi = 0; mi < magnitudes.size(); ++mi) {
    curve[mi] = {magnitudes[mi], success[mi]};
  }
  return curve;
}

std::vector<SuccessCurvePoint> success_curve_from_error_map(
    const SuccessProfile& profile, const ErrorMap& map, double distance_m,
    const std::vector<double>& magnitudes) {
  profile.check_valid();
  if (magnitudes.empty()) throw ConfigError("success curve needs at least one magnitude");
  if (map.values.size() != map.distance_knots.size() * map.error_knots.size() ||
      map.error_knots.size() < 2) {
    throw ConfigError("error map is not fitted");
  }

  std::vector<double> success(magnitudes.size(), 0.0);
  for (std::size_t mi = 0; mi < magnitudes.size(); ++mi) {
    // The map row is monotone in the error, so bisect for the smallest error
    // whose magnitude reaches the query, clamping outside the fitted range.
    double lo = map.error_knots.front();
    double hi = map.error_knots.back();
    if (map.evaluate(distance_m, lo).magnitude >= magnitudes[mi]) {
      hi = lo;
    } else if (map.evaluate(distance_m, hi).magnitude < magnitudes[mi]) {
      lo = hi;
    } else {
      for (int iter = 0; iter < 200 && hi - lo > 1e-15 * (1.0 + hi); ++iter) {
        const double mid = 0.5 * (lo + hi);
        if (map.evaluate(distance_m, mid).magnitude >= magnitudes[mi]) {
          hi = mid;
        } else {
          lo = mid;
        }
      }
    }
    success[mi] = profile.interpolate(hi);
  }
  isotonic_non_increasing(success);

  std::vector<SuccessCurvePoint> curve(magnitudes.size());
  for (std::size_t mi = 0; mi < magnitudes.size(); ++mi) {
    curve[mi] = {magnitudes[mi], success[mi]};
  }
  return curve;
}

}  // namespace ttx
