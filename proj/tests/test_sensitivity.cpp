#include "ttx/sensitivity.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "doctest.h"
#include "ttx/errors.hpp"
#include "ttx/random.hpp"
#include "ttx/se3.hpp"
#include "ttx/trajectory.hpp"

using namespace ttx;

namespace {

Transform random_pose(Rng& rng, double translation_scale) {
  Transform t;
  t.rotation = random_orientation(rng);
  t.translation = translation_scale * random_unit_vector(rng);
  return t;
}

// Spearman rank correlation; assumes no ties (holds a.s. for sample means).
double spearman(const std::vector<double>& x, const std::vector<double>& y) {
  const auto ranks = [](const std::vector<double>& v) {
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
      for (std::size_t j = 0; j < v.size(); ++j) {
        if (v[j] < v[i]) r[i] += 1.0;
      }
    }
    return r;
  };
  const std::vector<double> rx = ranks(x);
  const std::vector<double> ry = ranks(y);
  double d2 = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) d2 += (rx[i] - ry[i]) * (rx[i] - ry[i]);
  const double n = static_cast<double>(x.size());
  return 1.0 - 6.0 * d2 / (n * (n * n - 1.0));
}

// Synthetic sweep table lying exactly on magnitude = factor * error.
std::vector<SweepCell> linear_table(double factor) {
  std::vector<SweepCell> cells;
  for (double d : {0.2, 0.4, 0.6, 0.8}) {
    for (double m : {0.01, 0.02, 0.03, 0.04}) {
      SweepCell c;
      c.distance_m = d;
      c.magnitude = m;
      c.mean_translation_err_m = m / factor;
      cells.push_back(c);
    }
  }
  return cells;
}

// Two-row profile approximating a unit step: success 1 up to `edge`, 0 above.
SuccessProfile step_profile(double edge) {
  SuccessProfile p;
  p.eef_error_m = {edge, edge + 1e-9};
  p.success_rate = {1.0, 0.0};
  return p;
}

}  // namespace

TEST_CASE("noise propagation: exact magnitude identities") {
  Rng rng = make_rng(430);
  for (int trial = 0; trial < 40; ++trial) {
    const Transform t_rc = random_pose(rng, 0.8);
    const Transform demo = random_pose(rng, 1.0);
    Transform delta;
    delta.rotation = random_rotation(uniform_real(rng, 0.0, M_PI / 4.0), rng);
    delta.translation = uniform_real(rng, 0.0, 0.4) * random_unit_vector(rng);
    const std::uint64_t seed = 1000 + static_cast<std::uint64_t>(trial);

    // A translation perturbation of the pose delta moves the end effector by
    // exactly that much and cannot rotate it.
    const EefError pt =
        propagate_noise(t_rc, demo, delta, {NoiseTarget::PoseTranslation, 0.02}, seed);
    CHECK(std::abs(pt.translation_m - 0.02) <= 1e-9);
    CHECK(pt.rotation_rad <= 1e-9);

    // A rotation perturbation of the delta survives the frame change with its
    // angle intact.
    const EefError pr =
        propagate_noise(t_rc, demo, delta, {NoiseTarget::PoseRotation, 0.3}, seed);
    CHECK(std::abs(pr.rotation_rad - 0.3) <= 1e-9);

    // Calibration translation cancels partially under conjugation: the error
    // is (I - R) d, strictly short of the magnitude for delta rotations
    // under 60 degrees, and it never rotates the end effector.
    const EefError ct =
        propagate_noise(t_rc, demo, delta, {NoiseTarget::CalibrationTranslation, 0.05}, seed);
    CHECK(ct.translation_m < 0.05);
    CHECK(ct.rotation_rad <= 1e-9);

    const EefError cr =
        propagate_noise(t_rc, demo, delta, {NoiseTarget::CalibrationRotation, 0.1}, seed);
    CHECK(cr.translation_m >= 0.0);
    CHECK(cr.rotation_rad >= 0.0);
  }
}

TEST_CASE("noise propagation: zero magnitude and identity delta") {
  Rng rng = make_rng(431);
  const Transform t_rc = random_pose(rng, 0.8);
  const Transform demo = random_pose(rng, 1.0);
  Transform delta;
  delta.rotation = random_rotation(0.7, rng);
  delta.translation = {0.1, -0.05, 0.2};

  for (NoiseTarget target :
       {NoiseTarget::CalibrationRotation, NoiseTarget::CalibrationTranslation,
        NoiseTarget::PoseRotation, NoiseTarget::PoseTranslation}) {
    const EefError zero = propagate_noise(t_rc, demo, delta, {target, 0.0}, 5);
    CHECK(zero.translation_m == 0.0);
    CHECK(zero.rotation_rad <= 1e-12);
  }

  // With an identity delta the transfer is a no-op, so arbitrarily large
  // calibration errors conjugate away entirely.
  const Transform identity_delta;
  for (NoiseTarget target :
       {NoiseTarget::CalibrationRotation, NoiseTarget::CalibrationTranslation}) {
    const EefError err = propagate_noise(t_rc, demo, identity_delta, {target, 0.5}, 6);
    CHECK(err.translation_m <= 1e-12);
    CHECK(err.rotation_rad <= 1e-12);
  }

  CHECK_THROWS_AS(
      propagate_noise(t_rc, demo, delta, {NoiseTarget::PoseTranslation, -0.01}, 5),
      ConfigError);

  // Same seed, same draw; a different seed moves the noise direction.
  const EefError a = propagate_noise(t_rc, demo, delta, {NoiseTarget::PoseRotation, 0.2}, 7);
  const EefError b = propagate_noise(t_rc, demo, delta, {NoiseTarget::PoseRotation, 0.2}, 7);
  const EefError c = propagate_noise(t_rc, demo, delta, {NoiseTarget::PoseRotation, 0.2}, 8);
  CHECK(a.translation_m == b.translation_m);
  CHECK(a.rotation_rad == b.rotation_rad);
  CHECK(a.translation_m != c.translation_m);
}

TEST_CASE("noise target names round-trip") {
  for (NoiseTarget target :
       {NoiseTarget::CalibrationRotation, NoiseTarget::CalibrationTranslation,
        NoiseTarget::PoseRotation, NoiseTarget::PoseTranslation}) {
    CHECK(noise_target_from_string(to_string(target)) == target);
  }
  CHECK_THROWS_AS(noise_target_from_string("jitter"), ConfigError);
}

TEST_CASE("sweep: deterministic, schedule-independent, and shaped by the grid") {
  SweepConfig config;
  config.distances_m = {0.3, 0.6, 0.9};
  config.magnitudes = {0.01, 0.02};
  config.samples_per_cell = 50;
  config.seed = 21;

  const auto table = run_sweep(config, NoiseTarget::PoseTranslation);
  REQUIRE(table.size() == 6);
  for (std::size_t i = 0; i < table.size(); ++i) {
    CHECK(table[i].distance_m == config.distances_m[i / 2]);
    CHECK(table[i].magnitude == config.magnitudes[i % 2]);
    CHECK(table[i].mean_translation_err_m >= 0.0);
    CHECK(table[i].std_translation_err_m >= 0.0);
  }

  const auto again = run_sweep(config, NoiseTarget::PoseTranslation);
  for (std::size_t i = 0; i < table.size(); ++i) {
    CHECK(table[i].mean_translation_err_m == again[i].mean_translation_err_m);
    CHECK(table[i].std_translation_err_m == again[i].std_translation_err_m);
    CHECK(table[i].mean_rotation_err_rad == again[i].mean_rotation_err_rad);
    CHECK(table[i].std_rotation_err_rad == again[i].std_rotation_err_rad);
  }

  // Recompute one cell from the documented drawing protocol, visiting the
  // samples in reverse order and reducing in index order afterwards. Bitwise
  // agreement shows the result depends only on (seed, cell, sample) indices,
  // not on scheduling.
  const std::uint64_t cell_index = 3;  // distance 0.6, magnitude 0.02
  std::vector<double> t_err(static_cast<std::size_t>(config.samples_per_cell));
  for (int i = config.samples_per_cell - 1; i >= 0; --i) {
    const std::uint64_t sample_seed =
        mix_seed(config.seed, cell_index, static_cast<std::uint64_t>(i));
    Rng rng = make_rng(sample_seed);
    Transform demo;
    demo.rotation = random_orientation(rng);
    Vec3 dir = random_unit_vector(rng);
    if (dir.dot(config.camera_extrinsic.rotation.col(2)) < 0.0) dir = -dir;
    demo.translation = config.camera_extrinsic.translation + 0.6 * dir;
    Transform delta;
    delta.rotation = random_rotation(uniform_real(rng, 0.0, config.delta_rotation_range), rng);
    delta.translation =
        uniform_real(rng, 0.0, config.delta_translation_range) * random_unit_vector(rng);
    const EefError err =
        propagate_noise(config.camera_extrinsic, demo, delta,
                        {NoiseTarget::PoseTranslation, 0.02}, mix_seed(sample_seed, 0x70));
    t_err[static_cast<std::size_t>(i)] = err.translation_m;
  }
  double sum = 0.0;
  for (double e : t_err) sum += e;
  CHECK(sum / static_cast<double>(config.samples_per_cell) ==
        table[cell_index].mean_translation_err_m);

  SweepConfig bad = config;
  bad.distances_m.clear();
  CHECK_THROWS_AS(run_sweep(bad, NoiseTarget::PoseTranslation), ConfigError);
  bad = config;
  bad.samples_per_cell = 0;
  CHECK_THROWS_AS(run_sweep(bad, NoiseTarget::PoseTranslation), ConfigError);
  bad = config;
  bad.magnitudes = {-0.01};
  CHECK_THROWS_AS(run_sweep(bad, NoiseTarget::PoseTranslation), ConfigError);
}

TEST_CASE("sweep: calibration translation stays below its magnitude") {
  SweepConfig config;
  config.distances_m = {0.2, 0.7, 1.2};
  config.magnitudes = {0.01, 0.03};
  config.samples_per_cell = 300;
  config.seed = 22;
  const auto table = run_sweep(config, NoiseTarget::CalibrationTranslation);
  for (const SweepCell& c : table) {
    CHECK(c.mean_translation_err_m < c.magnitude);
    CHECK(c.mean_rotation_err_rad <= 1e-9);
  }
}

TEST_CASE("sweep: calibration rotation error grows with camera distance") {
  SweepConfig config;  // default grid, 1000 samples per cell
  config.magnitudes = {0.005, 0.02, 0.05};
  config.seed = 7;
  const auto table = run_sweep(config, NoiseTarget::CalibrationRotation);
  const std::size_t nm = config.magnitudes.size();
  for (std::size_t mi = 0; mi < nm; ++mi) {
    std::vector<double> dist, terr;
    for (std::size_t di = 0; di < config.distances_m.size(); ++di) {
      dist.push_back(table[di * nm + mi].distance_m);
      terr.push_back(table[di * nm + mi].mean_translation_err_m);
    }
    CHECK(spearman(dist, terr) > 0.99);
  }
}

TEST_CASE("error map: linear data is reproduced exactly") {
  const ErrorMap map = fit_error_map(linear_table(2.0));
  REQUIRE(map.distance_knots.size() == 4);
  REQUIRE(map.error_knots.size() == 4);
  for (double d : map.distance_knots) {
    for (double e : map.error_knots) {
      const auto eval = map.evaluate(d, e);
      CHECK(std::abs(eval.magnitude - 2.0 * e) <= 1e-6);
      CHECK_FALSE(eval.clamped);
    }
  }

  // Queries outside the fitted rectangle clamp to its edge and say so.
  const auto below = map.evaluate(0.05, map.error_knots[1]);
  CHECK(below.clamped);
  CHECK(below.magnitude ==
        doctest::Approx(map.evaluate(0.2, map.error_knots[1]).magnitude).epsilon(1e-12));
  const auto beyond = map.evaluate(0.4, map.error_knots.back() + 1.0);
  CHECK(beyond.clamped);
  CHECK(beyond.magnitude ==
        doctest::Approx(map.evaluate(0.4, map.error_knots.back()).magnitude).epsilon(1e-12));
}

TEST_CASE("error map: pose translation sweep yields the identity relation") {
  SweepConfig config;
  config.distances_m = {0.3, 0.6, 0.9, 1.2};
  config.magnitudes = {0.01, 0.02, 0.03, 0.04};
  config.samples_per_cell = 200;
  config.seed = 9;
  const auto table = run_sweep(config, NoiseTarget::PoseTranslation);
  for (const SweepCell& c : table) {
    CHECK(std::abs(c.mean_translation_err_m - c.magnitude) <= 1e-9);
  }
  const ErrorMap map = fit_error_map(table);
  for (double d : config.distances_m) {
    for (double e : map.error_knots) {
      CHECK(std::abs(map.evaluate(d, e).magnitude - e) <= 1e-9);
    }
  }
}

TEST_CASE("error map: rows are isotonic and degenerate tables are rejected") {
  SweepConfig config;
  config.distances_m = {0.2, 0.5, 0.8, 1.1};
  config.magnitudes = {0.002, 0.005, 0.01, 0.02, 0.05};
  config.samples_per_cell = 300;
  config.seed = 10;
  const auto table = run_sweep(config, NoiseTarget::CalibrationRotation);
  const ErrorMap map = fit_error_map(table);
  for (std::size_t d = 0; d < map.distance_knots.size(); ++d) {
    for (std::size_t e = 1; e < map.error_knots.size(); ++e) {
      CHECK(map.at(d, e) >= map.at(d, e - 1));
    }
  }

  std::vector<SweepCell> single_distance;
  for (double m : {0.01, 0.02, 0.03, 0.04}) {
    SweepCell c;
    c.distance_m = 0.5;
    c.magnitude = m;
    c.mean_translation_err_m = m;
    single_distance.push_back(c);
  }
  CHECK_THROWS_AS(fit_error_map(single_distance), DegenerateGeometry);

  std::vector<SweepCell> flat_errors;
  for (double d : {0.2, 0.4}) {
    for (double m : {0.01, 0.02}) {
      SweepCell c;
      c.distance_m = d;
      c.magnitude = m;
      c.mean_translation_err_m = 0.005;
      flat_errors.push_back(c);
    }
  }
  CHECK_THROWS_AS(fit_error_map(flat_errors), DegenerateGeometry);

  CHECK_THROWS_AS(fit_error_map({}), DegenerateGeometry);
}

TEST_CASE("success profile: validation and interpolation") {
  SuccessProfile profile;
  profile.eef_error_m = {0.0, 0.02, 0.04};
  profile.success_rate = {1.0, 0.5, 0.1};
  profile.check_valid();
  CHECK(profile.interpolate(-1.0) == 1.0);
  CHECK(profile.interpolate(0.01) == doctest::Approx(0.75).epsilon(1e-12));
  CHECK(profile.interpolate(0.03) == doctest::Approx(0.3).epsilon(1e-12));
  CHECK(profile.interpolate(9.0) == doctest::Approx(0.1).epsilon(1e-12));

  SuccessProfile bad = profile;
  bad.success_rate = {1.0, 0.5};
  CHECK_THROWS_AS(bad.check_valid(), ConfigError);
  bad = profile;
  bad.eef_error_m = {0.0, 0.02, 0.02};
  CHECK_THROWS_AS(bad.check_valid(), ConfigError);
  bad = profile;
  bad.success_rate[1] = 1.5;
  CHECK_THROWS_AS(bad.check_valid(), ConfigError);
  bad.eef_error_m.clear();
  bad.success_rate.clear();
  CHECK_THROWS_AS(bad.check_valid(), ConfigError);

  const SuccessProfile sigmoid = synthetic_sigmoid_profile(0.05, 0.01);
  sigmoid.check_valid();
  CHECK(sigmoid.eef_error_m.front() == 0.0);
  CHECK(sigmoid.success_rate.front() > 0.99);
  CHECK(sigmoid.success_rate.back() < 0.01);
  CHECK(sigmoid.interpolate(0.05) == doctest::Approx(0.5).epsilon(1e-6));
  CHECK_THROWS_AS(synthetic_sigmoid_profile(0.0, 0.01), ConfigError);
}

TEST_CASE("success curve: zero magnitude returns the profile's first entry") {
  const SuccessProfile profile = synthetic_sigmoid_profile(0.05, 0.01);
  const auto curve =
      map_success_curve(profile, NoiseTarget::PoseTranslation, 0.6, {0.0}, 20, 31);
  REQUIRE(curve.size() == 1);
  CHECK(curve[0].magnitude == 0.0);
  CHECK(std::abs(curve[0].expected_success - profile.success_rate.front()) <= 1e-12);
}

TEST_CASE("success curve: pose translation noise steps exactly at the profile edge") {
  const SuccessProfile profile = step_profile(0.02);
  const std::vector<double> magnitudes = {0.005, 0.01, 0.019, 0.021, 0.03, 0.05};
  const auto curve =
      map_success_curve(profile, NoiseTarget::PoseTranslation, 0.6, magnitudes, 40, 32);
  REQUIRE(curve.size() == magnitudes.size());
  CHECK(curve[0].expected_success == 1.0);
  CHECK(curve[1].expected_success == 1.0);
  CHECK(curve[2].expected_success == 1.0);
  CHECK(curve[3].expected_success == 0.0);
  CHECK(curve[4].expected_success == 0.0);
  CHECK(curve[5].expected_success == 0.0);
}

TEST_CASE("success curve: monotone and ordered across noise targets") {
  const SuccessProfile profile = synthetic_sigmoid_profile(0.03, 0.008);
  const std::vector<double> magnitudes = {0.005, 0.01, 0.02, 0.04, 0.08};

  const auto calib = map_success_curve(profile, NoiseTarget::CalibrationTranslation, 0.6,
                                       magnitudes, 100, 33);
  for (std::size_t i = 1; i < calib.size(); ++i) {
    CHECK(calib[i].expected_success <= calib[i - 1].expected_success + 1e-12);
  }

  // Pose noise lands with its full magnitude while calibration noise is
  // damped by the conjugation, so pose curves sit at or below calibration
  // curves point for point.
  const auto pose =
      map_success_curve(profile, NoiseTarget::PoseTranslation, 0.6, magnitudes, 100, 34);
  for (std::size_t i = 0; i < magnitudes.size(); ++i) {
    CHECK(pose[i].expected_success <= calib[i].expected_success + 1e-12);
  }

  CHECK_THROWS_AS(map_success_curve(profile, NoiseTarget::PoseTranslation, 0.6, {}, 10, 1),
                  ConfigError);
  CHECK_THROWS_AS(
      map_success_curve(profile, NoiseTarget::PoseTranslation, 0.0, {0.01}, 10, 1),
      ConfigError);
  CHECK_THROWS_AS(
      map_success_curve(profile, NoiseTarget::PoseTranslation, 0.6, {0.01}, 0, 1),
      ConfigError);
}

TEST_CASE("success curve via error map: inverts the fitted relation") {
  // Magnitude = 2 * error, so a step profile at error 0.012 becomes a step
  // in magnitude at 0.024.
  const ErrorMap map = fit_error_map(linear_table(2.0));
  const SuccessProfile profile = step_profile(0.012);
  const std::vector<double> magnitudes = {0.01, 0.02, 0.023, 0.025, 0.03};
  const auto curve = success_curve_from_error_map(profile, map, 0.5, magnitudes);
  REQUIRE(curve.size() == 5);
  CHECK(curve[0].expected_success == 1.0);
  CHECK(curve[1].expected_success == 1.0);
  CHECK(curve[2].expected_success == 1.0);
  CHECK(curve[3].expected_success == 0.0);
  CHECK(curve[4].expected_success == 0.0);

  // Parity with the forward route on the identity relation: pose translation
  // propagates magnitudes unchanged, so both routes read the profile at the
  // magnitude itself.
  SweepConfig config;
  config.distances_m = {0.3, 0.6, 0.9, 1.2};
  config.magnitudes = {0.01, 0.02, 0.03, 0.04};
  config.samples_per_cell = 100;
  config.seed = 35;
  const ErrorMap identity_map =
      fit_error_map(run_sweep(config, NoiseTarget::PoseTranslation));
  const SuccessProfile sigmoid = synthetic_sigmoid_profile(0.025, 0.006);
  const std::vector<double> queries = {0.015, 0.025, 0.035};
  const auto inverted = success_curve_from_error_map(sigmoid, identity_map, 0.6, queries);
  const auto forward =
      map_success_curve(sigmoid, NoiseTarget::PoseTranslation, 0.6, queries, 50, 36);
  for (std::size_t i = 0; i < queries.size(); ++i) {
    CHECK(std::abs(inverted[i].expected_success - forward[i].expected_success) <= 1e-6);
    CHECK(std::abs(inverted[i].expected_success - sigmoid.interpolate(queries[i])) <= 1e-6);
  }

  CHECK_THROWS_AS(success_curve_from_error_map(profile, ErrorMap{}, 0.5, {0.01}),
                  ConfigError);
}
