#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ttx/estimators.hpp"
#include "ttx/scene.hpp"
#include "ttx/sensitivity.hpp"
#include "ttx/trajectory.hpp"

namespace ttx {

// Run fn(0..count-1) on up to `threads` workers. Each index must write only
// to its own slot in caller-owned storage; callers reduce in index order
// afterwards, so results cannot depend on scheduling. Exceptions are
// captured and the lowest-index one is rethrown after all workers join.
void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& fn);

// ---------------------------------------------------------------------------
// Dataset generation

struct CategoryCount {
  ObjectCategory category = ObjectCategory::NonSym;
  int objects = 0;
};

struct DatasetConfig {
  // Desk-scale split: 55 objects x 20 pairs = 1100 scene pairs.
  std::vector<CategoryCount> categories = {{ObjectCategory::NonSym, 25},
                                           {ObjectCategory::InfSym, 10},
                                           {ObjectCategory::InfSymGeo, 5},
                                           {ObjectCategory::NSym, 10},
                                           {ObjectCategory::NSymGeo, 5}};
  int pairs_per_object = 20;
  double spacing_m = 0.004;
  NoiseOptions noise{0.002, 0.02};
  std::uint64_t seed = 0;

  void check_valid() const;
  // Partial JSON: absent keys keep their defaults. Categories come as an
  // object of counts, e.g. {"non-sym": 5, "inf-sym": 2}.
  static DatasetConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

struct DatasetSummary {
  int objects = 0;
  int pairs = 0;
  std::filesystem::path manifest_path;
};

// Write one directory per object with a JSON manifest + two PLYs per pair,
// plus a dataset-level manifest.json echoing the config and listing every
// pair. Deterministic per seed, file-for-file, at any thread count.
DatasetSummary cmd_gen_dataset(const DatasetConfig& config,
                               const std::filesystem::path& out_dir, int threads);

// ---------------------------------------------------------------------------
// Benchmark

struct BenchmarkRow {
  std::string estimator;
  ObjectCategory category = ObjectCategory::NonSym;
  std::string pair;  // manifest path relative to the dataset root
  double translation_err_cm = 0.0;
  double rotation_err_deg = 0.0;
};

struct BenchmarkSummaryEntry {
  std::string estimator;
  ObjectCategory category = ObjectCategory::NonSym;
  int pairs = 0;
  double mean_translation_err_cm = 0.0;
  double std_translation_err_cm = 0.0;
  double mean_rotation_err_deg = 0.0;
  double std_rotation_err_deg = 0.0;
};

struct BenchmarkReport {
  std::vector<BenchmarkRow> rows;          // (estimator, pair) in input order
  std::vector<BenchmarkSummaryEntry> summary;
  std::uint64_t seed = 0;
};

struct BenchmarkOptions {
  std::uint64_t seed = 0;
  int threads = 1;
  // Shared estimator settings (correspondence noise, template scoring, ICP
  // budget). The ICP budget starts in count mode: wall-time budgets would
  // make the report depend on machine speed.
  EstimatorOptions estimator;

  BenchmarkOptions() { estimator.icp.budget.count = 10; }
};

// Mean/std aggregation of raw rows per (estimator, category); summary order
// follows first appearance of the estimator and kAllCategories order.
std::vector<BenchmarkSummaryEntry> summarize_benchmark(const std::vector<BenchmarkRow>& rows);

// Run every estimator on every pair of a generated dataset with
// symmetry-aware errors. Writes raw rows to out_csv and the aggregate table
// to "<stem>_summary.csv" beside it (with prior published reference numbers
// quoted as context in a comment, never asserted).
BenchmarkReport cmd_run_benchmark(const std::filesystem::path& dataset_dir,
                                  const std::vector<std::string>& estimator_ids,
                                  const std::filesystem::path& out_csv,
                                  const BenchmarkOptions& options);

// ---------------------------------------------------------------------------
// Sensitivity sweeps

struct SensitivityOptions {
  SweepConfig sweep;              // grid + per-cell sample count + seed
  double curve_distance_m = 0.8;  // camera-to-workspace distance for curves
  int curve_samples = 1000;

  void check_valid() const;
  static SensitivityOptions from_json(const nlohmann::json& j);
};

struct SensitivityOutputs {
  std::vector<std::filesystem::path> sweep_csvs;  // one per noise target
  std::vector<std::filesystem::path> map_csvs;
  std::vector<std::filesystem::path> curve_csvs;
};

// For each of the four noise targets: Monte-Carlo sweep over the grid, a
// fitted error map, and a success curve at the configured distance mapped
// through the given profile.
SensitivityOutputs cmd_run_sensitivity(const SuccessProfile& profile,
                                       const std::filesystem::path& out_dir,
                                       const SensitivityOptions& options);

// ---------------------------------------------------------------------------
// Trajectory transfer

struct TransferDemoResult {
  PoseEstimate estimate;    // camera-frame delta + residual + diagnostics
  Transform delta_robot;    // estimate conjugated into the robot frame
  TransferResult transfer;  // transferred end-effector poses
  std::string estimator;
};

// Estimate the camera-frame delta on the pair, conjugate it into the robot
// frame, and left-compose it onto the demo. "+bias"-suffixed estimators use
// the demo's first pose for the translation adjustment.
TransferDemoResult cmd_transfer_demo(const DemoTrajectory& demo, const ScenePair& pair,
                                     const std::string& estimator_id, std::uint64_t seed);

// JSON result file: estimator, bias flag, residual, diagnostics, camera- and
// robot-frame deltas, and the transferred trajectory.
void save_transfer_result(const std::filesystem::path& path, const TransferDemoResult& result,
                          double timestep_s);

// ---------------------------------------------------------------------------
// Spatial success grid

struct SpatialGridConfig {
  ObjectCategory category = ObjectCategory::NonSym;
  std::uint64_t object_seed = 3;
  double spacing_m = 0.004;
  NoiseOptions noise{0.002, 0.02};
  int samples_per_quadrant = 50;
  double tolerance_m = 0.01;
  double tolerance_rad = 3.0 * M_PI / 180.0;
  int icp_restarts = 10;
  std::uint64_t seed = 0;

  void check_valid() const;
  static SpatialGridConfig from_json(const nlohmann::json& j);
};

struct QuadrantResult {
  int col = 0;  // x index, 0..1
  int row = 0;  // y index, 0..4
  Vec3 center = Vec3::Zero();
  double distance_from_demo_m = 0.0;  // between quadrant centers
  int samples = 0;
  int successes = 0;
  double fraction = 0.0;
};

struct SpatialGridReport {
  std::vector<QuadrantResult> quadrants;  // 10 entries, column-major in x then y
  Vec3 demo_position = Vec3::Zero();
  int demo_col = 0;
  int demo_row = 0;
  double tolerance_m = 0.0;
  double tolerance_rad = 0.0;
};

// Fix a demo placement at a quadrant center near the middle of the
// workspace, then re-place the object in each of the ten 15 cm quadrants
// with a fresh +/-45 degree z-rotation per sample; success means the
// symmetry-aware error stays within both tolerances.
SpatialGridReport cmd_spatial_grid(const SpatialGridConfig& config,
                                   const std::string& estimator_id,
                                   const std::filesystem::path& out_csv, int threads);

}  // namespace ttx
