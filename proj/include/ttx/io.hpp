#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "ttx/pointcloud.hpp"
#include "ttx/scene.hpp"
#include "ttx/se3.hpp"
#include "ttx/sensitivity.hpp"
#include "ttx/trajectory.hpp"

namespace ttx {

// JSON shapes (meters / radians throughout):
//   Transform      {"r": [[..3x3 row-major..]], "t": [x, y, z]}
//   DemoTrajectory {"timestep_s": s, "poses": [Transform, ...]}
//   Camera         {"intrinsics": {fx, fy, cx, cy, width, height},
//                   "extrinsic": Transform}
//   SymmetrySpec   {"kind": "none"|"finite"|"infinite", "order": n,
//                   "geometry_only": bool}
nlohmann::json to_json(const Transform& t);
Transform transform_from_json(const nlohmann::json& j);
nlohmann::json to_json(const DemoTrajectory& demo);
DemoTrajectory trajectory_from_json(const nlohmann::json& j);
nlohmann::json to_json(const Camera& camera);
Camera camera_from_json(const nlohmann::json& j);
nlohmann::json to_json(const SymmetrySpec& symmetry);
SymmetrySpec symmetry_from_json(const nlohmann::json& j);

// All writers below are atomic: content lands in a sibling temp file that is
// renamed over the target, so readers never observe partial files.
void write_text_atomic(const std::filesystem::path& path, const std::string& content);
std::string read_text(const std::filesystem::path& path);

void save_json(const std::filesystem::path& path, const nlohmann::json& j);
nlohmann::json load_json(const std::filesystem::path& path);

void save_trajectory(const std::filesystem::path& path, const DemoTrajectory& demo);
DemoTrajectory load_trajectory(const std::filesystem::path& path);
void save_camera(const std::filesystem::path& path, const Camera& camera);
Camera load_camera(const std::filesystem::path& path);

// ASCII PLY with x, y, z (float, meters) and, when the cloud is colored,
// red/green/blue (uint8). Coordinates are printed with full double
// precision, so geometry round-trips exactly; colors quantize to 1/255.
void save_ply(const std::filesystem::path& path, const PointCloud& cloud);
PointCloud load_ply(const std::filesystem::path& path);

// ScenePair bundle: a JSON manifest embedding the poses, camera, symmetry
// and category, referencing "<stem>_demo.ply" / "<stem>_test.ply" written
// next to it.
void save_scene_pair(const std::filesystem::path& manifest_path, const ScenePair& pair);
ScenePair load_scene_pair(const std::filesystem::path& manifest_path);

// CSV surfaces. Output CSVs start with a "# seed=<n>" comment followed by
// the header row; readers skip "#" lines.
//   SuccessProfile: eef_position_error_m,success_rate
//   Sweep:          distance_m,magnitude,mean_t_err_m,std_t_err_m,
//                   mean_r_err_rad,std_r_err_rad
//   Success curve:  magnitude,expected_success
SuccessProfile load_success_profile(const std::filesystem::path& path);
void save_success_profile(const std::filesystem::path& path, const SuccessProfile& profile);
void save_sweep_csv(const std::filesystem::path& path, const std::vector<SweepCell>& cells,
                    std::uint64_t seed);
std::vector<SweepCell> load_sweep_csv(const std::filesystem::path& path);
void save_success_curve_csv(const std::filesystem::path& path,
                            const std::vector<SuccessCurvePoint>& curve, std::uint64_t seed);

// Full-precision decimal rendering used by every CSV writer ("%.17g"):
// parsing the text recovers the exact double, which is what lets aggregate
// rows be recomputed from raw rows bit-for-bit.
std::string format_double(double value);

}  // namespace ttx
