#include "ttx/bench.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <mutex>
#include <sstream>
#include <thread>

#include <Eigen/Geometry>

#include "ttx/errors.hpp"
#include "ttx/io.hpp"
#include "ttx/metrics.hpp"
#include "ttx/random.hpp"

namespace ttx {
namespace {

constexpr double kQuadrantSize = 0.15;
constexpr int kGridCols = 2;
constexpr int kGridRows = 5;

std::string zero_padded(const char* prefix, int value) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%s%03d", prefix, value);
  return buf;
}

// Configs arrive from user-written JSON; a misspelled key silently falling
// back to its default would be miserable to debug, so reject anything
// unrecognized.
void require_known_keys(const nlohmann::json& j, std::initializer_list<const char*> keys) {
  for (const auto& item : j.items()) {
    const bool known = std::any_of(keys.begin(), keys.end(),
                                   [&](const char* k) { return item.key() == k; });
    if (!known) throw ConfigError("unknown config key: \"" + item.key() + "\"");
  }
}

void noise_from_json(const nlohmann::json& jn, NoiseOptions& noise) {
  require_known_keys(jn, {"depth_sigma_m", "color_jitter"});
  if (jn.contains("depth_sigma_m")) noise.depth_sigma_m = jn.at("depth_sigma_m").get<double>();
  if (jn.contains("color_jitter")) noise.color_jitter = jn.at("color_jitter").get<double>();
}

}  // namespace

void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& fn) {
  if (threads < 1) throw ConfigError("parallel_for: thread count must be >= 1");
  if (count == 0) return;
  const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(threads), count);
  if (workers == 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::mutex error_mutex;
  std::size_t error_index = count;
  std::exception_ptr error;
  auto work = [&] {
    while (!failed.load(std::memory_order_relaxed)) {
      const std::size_t i = next.fetch_add(1, std::memory_order_relaxed);
      if (i >= count) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        // Keep the lowest-index exception so a fixed set of failing items
        // reports the same error regardless of scheduling.
        if (i < error_index) {
          error_index = i;
          error = std::current_exception();
        }
        failed.store(true, std::memory_order_relaxed);
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

// ---------------------------------------------------------------------------
// Dataset generation

void DatasetConfig::check_valid() const {
  if (categories.empty()) throw ConfigError("dataset: no object categories");
  for (const auto& cc : categories)
    if (cc.objects <= 0) throw ConfigError("dataset: category object count must be positive");
  if (pairs_per_object <= 0) throw ConfigError("dataset: pairs_per_object must be positive");
  if (!(spacing_m > 0.0)) throw ConfigError("dataset: spacing_m must be positive");
  if (noise.depth_sigma_m < 0.0 || noise.color_jitter < 0.0)
    throw ConfigError("dataset: noise magnitudes must be non-negative");
}

DatasetConfig DatasetConfig::from_json(const nlohmann::json& j) {
  DatasetConfig c;
  require_known_keys(j, {"categories", "pairs_per_object", "spacing_m", "noise", "seed"});
  if (j.contains("categories")) {
    const auto& jc = j.at("categories");
    for (const auto& item : jc.items()) category_from_string(item.key());  // reject unknown
    c.categories.clear();
    for (ObjectCategory cat : kAllCategories) {
      const char* name = to_string(cat);
      if (jc.contains(name)) c.categories.push_back({cat, jc.at(name).get<int>()});
    }
  }
  if (j.contains("pairs_per_object")) c.pairs_per_object = j.at("pairs_per_object").get<int>();
  if (j.contains("spacing_m")) c.spacing_m = j.at("spacing_m").get<double>();
  if (j.contains("noise")) noise_from_json(j.at("noise"), c.noise);
  if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
  c.check_valid();
  return c;
}

nlohmann::json DatasetConfig::to_json() const {
  nlohmann::json jc = nlohmann::json::object();
  for (const auto& cc : categories) jc[to_string(cc.category)] = cc.objects;
  return {{"categories", jc},
          {"pairs_per_object", pairs_per_object},
          {"spacing_m", spacing_m},
          {"noise",
           {{"depth_sigma_m", noise.depth_sigma_m}, {"color_jitter", noise.color_jitter}}},
          {"seed", seed}};
}

DatasetSummary cmd_gen_dataset(const DatasetConfig& config, const std::filesystem::path& out_dir,
                               int threads) {
  config.check_valid();
  std::filesystem::create_directories(out_dir);

  struct PairJob {
    ObjectCategory category;
    int object_index;
    int pair_index;
    std::uint64_t object_seed;
    std::string relative;  // manifest path relative to out_dir
  };
  std::vector<PairJob> jobs;
  int object_index = 0;
  for (const auto& cc : config.categories) {
    for (int k = 0; k < cc.objects; ++k, ++object_index) {
      const std::uint64_t object_seed =
          mix_seed(config.seed, 0xb0, static_cast<std::uint64_t>(object_index));
      const std::string dir =
          zero_padded("obj_", object_index) + std::string("_") + to_string(cc.category);
      std::filesystem::create_directories(out_dir / dir);
      for (int p = 0; p < config.pairs_per_object; ++p)
        jobs.push_back(
            {cc.category, object_index, p, object_seed, dir + "/" + zero_padded("pair_", p) + ".json"});
    }
  }

  const Camera camera = default_camera();
  const Aabb workspace = default_workspace();
  parallel_for(jobs.size(), threads, [&](std::size_t i) {
    const PairJob& job = jobs[i];
    const ObjectModel model = build_object(job.category, job.object_seed, config.spacing_m);
    const std::uint64_t pair_seed =
        mix_seed(job.object_seed, 0x9a, static_cast<std::uint64_t>(job.pair_index));
    const ScenePair pair = sample_scene_pair(model, camera, workspace, kDefaultMaxZRotation,
                                             config.noise, pair_seed);
    save_scene_pair(out_dir / job.relative, pair);
  });

  nlohmann::json pairs = nlohmann::json::array();
  for (const PairJob& job : jobs)
    pairs.push_back({{"category", to_string(job.category)},
                     {"object", job.object_index},
                     {"pair", job.pair_index},
                     {"manifest", job.relative}});
  const nlohmann::json manifest = {
      {"config", config.to_json()}, {"objects", object_index}, {"pairs", pairs}};
  DatasetSummary summary;
  summary.objects = object_index;
  summary.pairs = static_cast<int>(jobs.size());
  summary.manifest_path = out_dir / "manifest.json";
  save_json(summary.manifest_path, manifest);
  return summary;
}

// ---------------------------------------------------------------------------
// Benchmark

std::vector<BenchmarkSummaryEntry> summarize_benchmark(const std::vector<BenchmarkRow>& rows) {
  std::vector<std::string> order;
  for (const auto& row : rows)
    if (std::find(order.begin(), order.end(), row.estimator) == order.end())
      order.push_back(row.estimator);

  std::vector<BenchmarkSummaryEntry> summary;
  for (const auto& estimator : order) {
    for (ObjectCategory category : kAllCategories) {
      std::vector<double> t, r;
      for (const auto& row : rows) {
        if (row.estimator != estimator || row.category != category) continue;
        t.push_back(row.translation_err_cm);
        r.push_back(row.rotation_err_deg);
      }
      if (t.empty()) continue;
      const auto moments = [](const std::vector<double>& xs) {
        double mean = 0.0;
        for (double x : xs) mean += x;
        mean /= static_cast<double>(xs.size());
        double var = 0.0;
        for (double x : xs) var += (x - mean) * (x - mean);
        return std::pair<double, double>(mean, std::sqrt(var / static_cast<double>(xs.size())));
      };
      const auto [mt, st] = moments(t);
      const auto [mr, sr] = moments(r);
      summary.push_back({estimator, category, static_cast<int>(t.size()), mt, st, mr, sr});
    }
  }
  return summary;
}

BenchmarkReport cmd_run_benchmark(const std::filesystem::path& dataset_dir,
                                  const std::vector<std::string>& estimator_ids,
                                  const std::filesystem::path& out_csv,
                                  const BenchmarkOptions& options) {
  if (estimator_ids.empty()) throw ConfigError("benchmark: no estimators requested");
  if (options.estimator.icp.budget.count <= 0)
    throw ConfigError("benchmark: the ICP budget must stay in count mode for reproducible runs");

  const nlohmann::json manifest = load_json(dataset_dir / "manifest.json");
  struct PairRef {
    std::string relative;
    ObjectCategory category;
  };
  std::vector<PairRef> pairs;
  if (!manifest.contains("pairs")) throw IoError("dataset manifest: missing \"pairs\"");
  for (const auto& jp : manifest.at("pairs"))
    pairs.push_back({jp.at("manifest").get<std::string>(),
                     category_from_string(jp.at("category").get<std::string>())});
  if (pairs.empty()) throw ConfigError("benchmark: dataset lists no pairs");

  std::vector<Estimator> estimators;
  estimators.reserve(estimator_ids.size());
  for (const auto& id : estimator_ids) estimators.push_back(make_estimator(id, options.estimator));

  BenchmarkReport report;
  report.seed = options.seed;
  report.rows.resize(estimator_ids.size() * pairs.size());
  parallel_for(report.rows.size(), options.threads, [&](std::size_t j) {
    const std::size_t e = j / pairs.size();
    const std::size_t k = j % pairs.size();
    const ScenePair pair = load_scene_pair(dataset_dir / pairs[k].relative);
    const std::uint64_t seed = mix_seed(options.seed, e, k);
    const PoseEstimate estimate = estimators[e](pair, seed);
    const PoseError err = symmetry_aware_error(pair, estimate.delta_camera);
    report.rows[j] = {estimator_ids[e], pairs[k].category, pairs[k].relative,
                      err.translation_m * 100.0, err.rotation_rad * 180.0 / M_PI};
  });
  report.summary = summarize_benchmark(report.rows);

  std::ostringstream raw;
  raw << "# seed=" << options.seed << "\n";
  raw << "estimator,category,pair,translation_err_cm,rotation_err_deg\n";
  for (const auto& row : report.rows)
    raw << row.estimator << "," << to_string(row.category) << "," << row.pair << ","
        << format_double(row.translation_err_cm) << "," << format_double(row.rotation_err_deg)
        << "\n";
  write_text_atomic(out_csv, raw.str());

  std::ostringstream sum;
  sum << "# seed=" << options.seed << "\n";
  sum << "# context: a prior published benchmark with a learned pose front-end reports "
         "5.9 +/- 11.2 cm and 4.3 +/- 10.1 deg overall; quoted for scale, not asserted\n";
  sum << "estimator,category,pairs,mean_translation_err_cm,std_translation_err_cm,"
         "mean_rotation_err_deg,std_rotation_err_deg\n";
  for (const auto& entry : report.summary)
    sum << entry.estimator << "," << to_string(entry.category) << "," << entry.pairs << ","
        << format_double(entry.mean_translation_err_cm) << ","
        << format_double(entry.std_translation_err_cm) << ","
        << format_double(entry.mean_rotation_err_deg) << ","
        << format_double(entry.std_rotation_err_deg) << "\n";
  std::filesystem::path summary_path = out_csv;
  summary_path.replace_filename(out_csv.stem().string() + "_summary" +
                                out_csv.extension().string());
  write_text_atomic(summary_path, sum.str());
  return report;
}

// ---------------------------------------------------------------------------
// Sensitivity sweeps

void SensitivityOptions::check_valid() const {
  sweep.check_valid();
  if (!(curve_distance_m > 0.0)) throw ConfigError("sensitivity: curve distance must be positive");
  if (curve_samples <= 0) throw ConfigError("sensitivity: curve sample count must be positive");
}

SensitivityOptions SensitivityOptions::from_json(const nlohmann::json& j) {
  SensitivityOptions o;
  require_known_keys(j, {"distances_m", "magnitudes", "samples_per_cell", "delta_rotation_range",
                         "delta_translation_range", "camera_extrinsic", "seed",
                         "curve_distance_m", "curve_samples"});
  if (j.contains("distances_m")) o.sweep.distances_m = j.at("distances_m").get<std::vector<double>>();
  if (j.contains("magnitudes")) o.sweep.magnitudes = j.at("magnitudes").get<std::vector<double>>();
  if (j.contains("samples_per_cell")) o.sweep.samples_per_cell = j.at("samples_per_cell").get<int>();
  if (j.contains("delta_rotation_range"))
    o.sweep.delta_rotation_range = j.at("delta_rotation_range").get<double>();
  if (j.contains("delta_translation_range"))
    o.sweep.delta_translation_range = j.at("delta_translation_range").get<double>();
  if (j.contains("camera_extrinsic"))
    o.sweep.camera_extrinsic = transform_from_json(j.at("camera_extrinsic"));
  if (j.contains("seed")) o.sweep.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("curve_distance_m")) o.curve_distance_m = j.at("curve_distance_m").get<double>();
  if (j.contains("curve_samples")) o.curve_samples = j.at("curve_samples").get<int>();
  o.check_valid();
  return o;
}

SensitivityOutputs cmd_run_sensitivity(const SuccessProfile& profile,
                                       const std::filesystem::path& out_dir,
                                       const SensitivityOptions& options) {
  profile.check_valid();
  options.check_valid();
  std::filesystem::create_directories(out_dir);

  std::vector<double> curve_magnitudes = options.sweep.magnitudes;
  if (curve_magnitudes.empty() || curve_magnitudes.front() > 0.0)
    curve_magnitudes.insert(curve_magnitudes.begin(), 0.0);  // anchor at the clean baseline

  SensitivityOutputs outputs;
  for (NoiseTarget target :
       {NoiseTarget::CalibrationRotation, NoiseTarget::CalibrationTranslation,
        NoiseTarget::PoseRotation, NoiseTarget::PoseTranslation}) {
    const std::string name = to_string(target);
    const std::vector<SweepCell> cells = run_sweep(options.sweep, target);
    const std::filesystem::path sweep_path = out_dir / ("sweep_" + name + ".csv");
    save_sweep_csv(sweep_path, cells, options.sweep.seed);
    outputs.sweep_csvs.push_back(sweep_path);

    const ErrorMap map = fit_error_map(cells);
    std::ostringstream ms;
    ms << "# seed=" << options.sweep.seed << "\n";
    ms << "distance_m,eef_error_m,magnitude\n";
    for (std::size_t d = 0; d < map.distance_knots.size(); ++d)
      for (std::size_t e = 0; e < map.error_knots.size(); ++e)
        ms << format_double(map.distance_knots[d]) << "," << format_double(map.error_knots[e])
           << "," << format_double(map.at(d, e)) << "\n";
    const std::filesystem::path map_path = out_dir / ("map_" + name + ".csv");
    write_text_atomic(map_path, ms.str());
    outputs.map_csvs.push_back(map_path);

    const std::vector<SuccessCurvePoint> curve =
        map_success_curve(profile, target, options.curve_distance_m, curve_magnitudes,
                          options.curve_samples,
                          mix_seed(options.sweep.seed, static_cast<std::uint64_t>(target), 0x5c));
    const std::filesystem::path curve_path = out_dir / ("curve_" + name + ".csv");
    save_success_curve_csv(curve_path, curve, options.sweep.seed);
    outputs.curve_csvs.push_back(curve_path);
  }
  return outputs;
}

// ---------------------------------------------------------------------------
// Trajectory transfer

TransferDemoResult cmd_transfer_demo(const DemoTrajectory& demo, const ScenePair& pair,
                                     const std::string& estimator_id, std::uint64_t seed) {
  demo.check_valid();
  EstimatorOptions eopts;
  eopts.icp.budget.count = 10;  // reproducible default for a CLI one-shot
  eopts.first_demo_pose = demo.poses.front();
  const Estimator estimator = make_estimator(estimator_id, eopts);

  TransferDemoResult result;
  result.estimator = estimator_id;
  result.estimate = estimator(pair, seed);
  result.delta_robot = change_delta_frame(pair.camera.extrinsic, result.estimate.delta_camera);
  result.transfer = transfer_trajectory(demo, result.delta_robot);
  result.transfer.bias_applied = estimator_id.ends_with("+bias");
  return result;
}

void save_transfer_result(const std::filesystem::path& path, const TransferDemoResult& result,
                          double timestep_s) {
  nlohmann::json diag = nlohmann::json::object();
  for (const auto& [key, value] : result.estimate.diagnostics) diag[key] = value;
  DemoTrajectory out;
  out.timestep_s = timestep_s;
  out.poses = result.transfer.poses;
  save_json(path, {{"estimator", result.estimator},
                   {"bias_applied", result.transfer.bias_applied},
                   {"residual", result.estimate.residual},
                   {"diagnostics", diag},
                   {"delta_camera", to_json(result.estimate.delta_camera)},
                   {"delta_robot", to_json(result.delta_robot)},
                   {"trajectory", to_json(out)}});
}

// ---------------------------------------------------------------------------
// Spatial success grid

void SpatialGridConfig::check_valid() const {
  if (!(spacing_m > 0.0)) throw ConfigError("spatial grid: spacing_m must be positive");
  if (noise.depth_sigma_m < 0.0 || noise.color_jitter < 0.0)
    throw ConfigError("spatial grid: noise magnitudes must be non-negative");
  if (samples_per_quadrant <= 0)
    throw ConfigError("spatial grid: samples_per_quadrant must be positive");
  if (!(tolerance_m > 0.0) || !(tolerance_rad > 0.0))
    throw ConfigError("spatial grid: tolerances must be positive");
  if (icp_restarts <= 0) throw ConfigError("spatial grid: icp_restarts must be positive");
}

SpatialGridConfig SpatialGridConfig::from_json(const nlohmann::json& j) {
  SpatialGridConfig c;
  require_known_keys(j, {"category", "object_seed", "spacing_m", "noise", "samples_per_quadrant",
                         "tolerance_m", "tolerance_rad", "icp_restarts", "seed"});
  if (j.contains("category")) c.category = category_from_string(j.at("category").get<std::string>());
  if (j.contains("object_seed")) c.object_seed = j.at("object_seed").get<std::uint64_t>();
  if (j.contains("spacing_m")) c.spacing_m = j.at("spacing_m").get<double>();
  if (j.contains("noise")) noise_from_json(j.at("noise"), c.noise);
  if (j.contains("samples_per_quadrant"))
    c.samples_per_quadrant = j.at("samples_per_quadrant").get<int>();
  if (j.contains("tolerance_m")) c.tolerance_m = j.at("tolerance_m").get<double>();
  if (j.contains("tolerance_rad")) c.tolerance_rad = j.at("tolerance_rad").get<double>();
  if (j.contains("icp_restarts")) c.icp_restarts = j.at("icp_restarts").get<int>();
  if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
  c.check_valid();
  return c;
}

namespace {

Transform tabletop_pose(double x, double y, double z_angle) {
  Transform t;
  t.rotation = Eigen::AngleAxisd(z_angle, Vec3::UnitZ()).toRotationMatrix();
  t.translation = Vec3(x, y, 0.0);
  return t;
}

}  // namespace

SpatialGridReport cmd_spatial_grid(const SpatialGridConfig& config,
                                   const std::string& estimator_id,
                                   const std::filesystem::path& out_csv, int threads) {
  config.check_valid();
  const ObjectModel model = build_object(config.category, config.object_seed, config.spacing_m);
  const Camera camera = default_camera();
  const Aabb workspace = default_workspace();
  const double x0 = workspace.min.x();
  const double y0 = workspace.min.y();

  EstimatorOptions eopts;
  eopts.icp.budget.count = config.icp_restarts;
  const Estimator estimator = make_estimator(estimator_id, eopts);

  SpatialGridReport report;
  report.tolerance_m = config.tolerance_m;
  report.tolerance_rad = config.tolerance_rad;
  report.demo_col = 0;
  report.demo_row = kGridRows / 2;  // middle row, nearer column: beside the workspace center
  report.demo_position =
      Vec3(x0 + (report.demo_col + 0.5) * kQuadrantSize,
           y0 + (report.demo_row + 0.5) * kQuadrantSize, 0.0);

  Rng demo_rng = make_rng(mix_seed(config.seed, 0xde));
  const double demo_angle = uniform_real(demo_rng, -M_PI, M_PI);
  const Transform object_pose_demo =
      compose(inverse(camera.extrinsic),
              tabletop_pose(report.demo_position.x(), report.demo_position.y(), demo_angle));
  const PointCloud demo_cloud = render_partial_view(model, object_pose_demo, camera, config.noise,
                                                    mix_seed(config.seed, 0xdc));
  if (demo_cloud.empty()) throw DegenerateGeometry("spatial grid: demo render saw no points");

  const std::size_t per = static_cast<std::size_t>(config.samples_per_quadrant);
  const std::size_t total = static_cast<std::size_t>(kGridCols * kGridRows) * per;
  std::vector<unsigned char> success(total, 0);
  parallel_for(total, threads, [&](std::size_t i) {
    const std::size_t q = i / per;
    const int col = static_cast<int>(q) / kGridRows;
    const int row = static_cast<int>(q) % kGridRows;
    const std::uint64_t sample_seed = mix_seed(config.seed, q, i % per);
    Rng rng = make_rng(sample_seed);
    const double x = uniform_real(rng, x0 + col * kQuadrantSize, x0 + (col + 1) * kQuadrantSize);
    const double y = uniform_real(rng, y0 + row * kQuadrantSize, y0 + (row + 1) * kQuadrantSize);
    const double spin = uniform_real(rng, -kDefaultMaxZRotation, kDefaultMaxZRotation);

    ScenePair pair;
    pair.demo_cloud = demo_cloud;
    pair.object_pose_demo = object_pose_demo;
    pair.object_pose_test =
        compose(inverse(camera.extrinsic), tabletop_pose(x, y, demo_angle + spin));
    pair.true_delta_camera = compose(pair.object_pose_test, inverse(pair.object_pose_demo));
    pair.camera = camera;
    pair.symmetry = model.symmetry;
    pair.category = model.category;
    try {
      pair.test_cloud = render_partial_view(model, pair.object_pose_test, camera, config.noise,
                                            mix_seed(sample_seed, 0x7e));
      if (pair.test_cloud.empty()) return;  // placement fell outside the view: a failure
      const PoseEstimate estimate = estimator(pair, mix_seed(sample_seed, 0xe5));
      const PoseError err = symmetry_aware_error(pair, estimate.delta_camera);
      success[i] =
          err.translation_m <= config.tolerance_m && err.rotation_rad <= config.tolerance_rad;
    } catch (const Error&) {
      // Degenerate render or estimator breakdown counts as a failed sample.
    }
  });

  for (int col = 0; col < kGridCols; ++col) {
    for (int row = 0; row < kGridRows; ++row) {
      const std::size_t q = static_cast<std::size_t>(col * kGridRows + row);
      QuadrantResult quad;
      quad.col = col;
      quad.row = row;
      quad.center = Vec3(x0 + (col + 0.5) * kQuadrantSize, y0 + (row + 0.5) * kQuadrantSize, 0.0);
      quad.distance_from_demo_m = (quad.center - report.demo_position).norm();
      quad.samples = config.samples_per_quadrant;
      for (std::size_t i = q * per; i < (q + 1) * per; ++i) quad.successes += success[i];
      quad.fraction = static_cast<double>(quad.successes) / static_cast<double>(quad.samples);
      report.quadrants.push_back(quad);
    }
  }

  std::ostringstream csv;
  csv << "# seed=" << config.seed << "\n";
  csv << "col,row,center_x_m,center_y_m,distance_from_demo_m,samples,successes,success_fraction\n";
  for (const auto& quad : report.quadrants)
    csv << quad.col << "," << quad.row << "," << format_double(quad.center.x()) << ","
        << format_double(quad.center.y()) << "," << format_double(quad.distance_from_demo_m) << ","
        << quad.samples << "," << quad.successes << "," << format_double(quad.fraction) << "\n";
  write_text_atomic(out_csv, csv.str());
  return report;
}

}  // namespace ttx
