#include "ttx/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <system_error>

#include "ttx/errors.hpp"

using nlohmann::json;

namespace ttx {
namespace {

json vec3_to_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

Vec3 vec3_from_json(const json& j) {
  if (!j.is_array() || j.size() != 3) throw IoError("expected a 3-element array");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

const json& require(const json& j, const char* key) {
  const auto it = j.find(key);
  if (it == j.end()) throw IoError(std::string("missing key \"") + key + "\"");
  return *it;
}

// Split one CSV data line on commas and parse every field as a double.
std::vector<double> parse_csv_numbers(const std::string& line, std::size_t expected,
                                      const std::filesystem::path& path) {
  std::vector<double> out;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(field, &used));
      while (used < field.size() && std::isspace(static_cast<unsigned char>(field[used]))) ++used;
      if (used != field.size()) throw std::invalid_argument(field);
    } catch (const std::exception&) {
      throw IoError(path.string() + ": not a number: \"" + field + "\"");
    }
  }
  if (out.size() != expected) {
    throw IoError(path.string() + ": expected " + std::to_string(expected) + " fields, got " +
                  std::to_string(out.size()));
  }
  return out;
}

// Yield non-comment lines; the first one must equal `header`.
std::vector<std::string> read_csv_body(const std::filesystem::path& path,
                                       const std::string& header) {
  std::stringstream ss(read_text(path));
  std::vector<std::string> body;
  std::string line;
  bool saw_header = false;
  while (std::getline(ss, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    if (!saw_header) {
      if (line != header) {
        throw IoError(path.string() + ": expected header \"" + header + "\", got \"" + line +
                      "\"");
      }
      saw_header = true;
      continue;
    }
    body.push_back(line);
  }
  if (!saw_header) throw IoError(path.string() + ": missing header row");
  return body;
}

}  // namespace

std::string format_double(double value) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", value);
  return buf;
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("read failed: " + path.string());
  return ss.str();
}

void write_text_atomic(const std::filesystem::path& path, const std::string& content) {
  const std::filesystem::path tmp = path.string() + ".tmp~";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out) throw IoError("write failed: " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("rename to " + path.string() + " failed: " + ec.message());
}

json to_json(const Transform& t) {
  json r = json::array();
  for (int i = 0; i < 3; ++i) {
    r.push_back(json::array({t.rotation(i, 0), t.rotation(i, 1), t.rotation(i, 2)}));
  }
  return json{{"r", std::move(r)}, {"t", vec3_to_json(t.translation)}};
}

Transform transform_from_json(const json& j) {
  const json& r = require(j, "r");
  if (!r.is_array() || r.size() != 3) throw IoError("\"r\" must be a 3x3 array");
  Transform t;
  for (int i = 0; i < 3; ++i) {
    const json& row = r[static_cast<std::size_t>(i)];
    if (!row.is_array() || row.size() != 3) throw IoError("\"r\" must be a 3x3 array");
    for (int k = 0; k < 3; ++k) t.rotation(i, k) = row[static_cast<std::size_t>(k)].get<double>();
  }
  t.translation = vec3_from_json(require(j, "t"));
  if (!is_rotation(t.rotation)) throw IoError("\"r\" is not a rotation matrix");
  return t;
}

json to_json(const DemoTrajectory& demo) {
  json poses = json::array();
  for (const Transform& p : demo.poses) poses.push_back(to_json(p));
  return json{{"timestep_s", demo.timestep_s}, {"poses", std::move(poses)}};
}

DemoTrajectory trajectory_from_json(const json& j) {
  DemoTrajectory demo;
  demo.timestep_s = require(j, "timestep_s").get<double>();
  const json& poses = require(j, "poses");
  if (!poses.is_array()) throw IoError("\"poses\" must be an array");
  for (const json& p : poses) demo.poses.push_back(transform_from_json(p));
  demo.check_valid();
  return demo;
}

json to_json(const Camera& camera) {
  return json{{"intrinsics",
               {{"fx", camera.intrinsics.fx},
                {"fy", camera.intrinsics.fy},
                {"cx", camera.intrinsics.cx},
                {"cy", camera.intrinsics.cy},
                {"width", camera.intrinsics.width},
                {"height", camera.intrinsics.height}}},
              {"extrinsic", to_json(camera.extrinsic)}};
}

Camera camera_from_json(const json& j) {
  Camera camera;
  const json& in = require(j, "intrinsics");
  camera.intrinsics.fx = require(in, "fx").get<double>();
  camera.intrinsics.fy = require(in, "fy").get<double>();
  camera.intrinsics.cx = require(in, "cx").get<double>();
  camera.intrinsics.cy = require(in, "cy").get<double>();
  camera.intrinsics.width = require(in, "width").get<int>();
  camera.intrinsics.height = require(in, "height").get<int>();
  camera.extrinsic = transform_from_json(require(j, "extrinsic"));
  camera.check_valid();
  return camera;
}

json to_json(const SymmetrySpec& symmetry) {
  const char* kind = symmetry.kind == SymmetrySpec::Kind::None       ? "none"
                     : symmetry.kind == SymmetrySpec::Kind::Finite   ? "finite"
                                                                     : "infinite";
  return json{{"kind", kind}, {"order", symmetry.order}, {"geometry_only", symmetry.geometry_only}};
}

SymmetrySpec symmetry_from_json(const json& j) {
  SymmetrySpec symmetry;
  const std::string kind = require(j, "kind").get<std::string>();
  if (kind == "none") {
    symmetry.kind = SymmetrySpec::Kind::None;
  } else if (kind == "finite") {
    symmetry.kind = SymmetrySpec::Kind::Finite;
  } else if (kind == "infinite") {
    symmetry.kind = SymmetrySpec::Kind::Infinite;
  } else {
    throw IoError("unknown symmetry kind: " + kind);
  }
  symmetry.order = require(j, "order").get<int>();
  symmetry.geometry_only = require(j, "geometry_only").get<bool>();
  symmetry.check_valid();
  return symmetry;
}

void save_json(const std::filesystem::path& path, const json& j) {
  write_text_atomic(path, j.dump(2) + "\n");
}

json load_json(const std::filesystem::path& path) {
  try {
    return json::parse(read_text(path));
  } catch (const json::parse_error& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

void save_trajectory(const std::filesystem::path& path, const DemoTrajectory& demo) {
  demo.check_valid();
  save_json(path, to_json(demo));
}

DemoTrajectory load_trajectory(const std::filesystem::path& path) {
  try {
    return trajectory_from_json(load_json(path));
  } catch (const json::exception& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

void save_camera(const std::filesystem::path& path, const Camera& camera) {
  camera.check_valid();
  save_json(path, to_json(camera));
}

Camera load_camera(const std::filesystem::path& path) {
  try {
    return camera_from_json(load_json(path));
  } catch (const json::exception& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

void save_ply(const std::filesystem::path& path, const PointCloud& cloud) {
  cloud.check_valid();
  std::string out;
  out += "ply\nformat ascii 1.0\n";
  out += "element vertex " + std::to_string(cloud.size()) + "\n";
  out += "property float x\nproperty float y\nproperty float z\n";
  if (cloud.has_colors()) {
    out += "property uchar red\nproperty uchar green\nproperty uchar blue\n";
  }
  out += "end_header\n";
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const Vec3& p = cloud.points[i];
    out += format_double(p.x()) + " " + format_double(p.y()) + " " + format_double(p.z());
    if (cloud.has_colors()) {
      for (int c = 0; c < 3; ++c) {
        const double clamped = std::clamp(cloud.colors[i](c), 0.0, 1.0);
        out += " " + std::to_string(static_cast<int>(std::lround(clamped * 255.0)));
      }
    }
    out += "\n";
  }
  write_text_atomic(path, out);
}

PointCloud load_ply(const std::filesystem::path& path) {
  std::stringstream ss(read_text(path));
  std::string line;
  auto next_line = [&](const char* what) {
    if (!std::getline(ss, line)) throw IoError(path.string() + ": truncated before " + what);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return line;
  };

  if (next_line("magic") != "ply") throw IoError(path.string() + ": not a PLY file");
  if (next_line("format") != "format ascii 1.0") {
    throw IoError(path.string() + ": only ascii 1.0 PLY is supported");
  }

  std::size_t count = 0;
  std::vector<std::string> properties;
  while (next_line("end_header") != "end_header") {
    std::stringstream ls(line);
    std::string word;
    ls >> word;
    if (word == "comment") continue;
    if (word == "element") {
      std::string name;
      ls >> name >> count;
      if (name != "vertex") throw IoError(path.string() + ": only vertex elements are supported");
    } else if (word == "property") {
      std::string type, name;
      ls >> type >> name;
      properties.push_back(name);
    } else {
      throw IoError(path.string() + ": unexpected header line \"" + line + "\"");
    }
  }
  const bool colored = properties.size() == 6;
  const std::vector<std::string> want_xyz = {"x", "y", "z"};
  const std::vector<std::string> want_rgb = {"x", "y", "z", "red", "green", "blue"};
  if (properties != (colored ? want_rgb : want_xyz)) {
    throw IoError(path.string() + ": unsupported vertex layout");
  }

  PointCloud cloud;
  cloud.points.reserve(count);
  if (colored) cloud.colors.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    std::stringstream ls(next_line("vertex row"));
    Vec3 p;
    if (!(ls >> p.x() >> p.y() >> p.z())) throw IoError(path.string() + ": malformed vertex row");
    cloud.points.push_back(p);
    if (colored) {
      int r = 0, g = 0, b = 0;
      if (!(ls >> r >> g >> b)) throw IoError(path.string() + ": malformed color columns");
      cloud.colors.push_back(Vec3(r, g, b) / 255.0);
    }
  }
  return cloud;
}

void save_scene_pair(const std::filesystem::path& manifest_path, const ScenePair& pair) {
  const std::string stem = manifest_path.stem().string();
  const std::string demo_name = stem + "_demo.ply";
  const std::string test_name = stem + "_test.ply";
  const std::filesystem::path dir = manifest_path.parent_path();
  save_ply(dir / demo_name, pair.demo_cloud);
  save_ply(dir / test_name, pair.test_cloud);

  json manifest{{"demo_ply", demo_name},
                {"test_ply", test_name},
                {"object_pose_demo", to_json(pair.object_pose_demo)},
                {"object_pose_test", to_json(pair.object_pose_test)},
                {"true_delta_camera", to_json(pair.true_delta_camera)},
                {"camera", to_json(pair.camera)},
                {"symmetry", to_json(pair.symmetry)},
                {"category", to_string(pair.category)}};
  save_json(manifest_path, manifest);
}

ScenePair load_scene_pair(const std::filesystem::path& manifest_path) {
  const json manifest = load_json(manifest_path);
  const std::filesystem::path dir = manifest_path.parent_path();
  try {
    ScenePair pair;
    pair.demo_cloud = load_ply(dir / require(manifest, "demo_ply").get<std::string>());
    pair.test_cloud = load_ply(dir / require(manifest, "test_ply").get<std::string>());
    pair.object_pose_demo = transform_from_json(require(manifest, "object_pose_demo"));
    pair.object_pose_test = transform_from_json(require(manifest, "object_pose_test"));
    pair.true_delta_camera = transform_from_json(require(manifest, "true_delta_camera"));
    pair.camera = camera_from_json(require(manifest, "camera"));
    pair.symmetry = symmetry_from_json(require(manifest, "symmetry"));
    pair.category = category_from_string(require(manifest, "category").get<std::string>());
    return pair;
  } catch (const json::exception& e) {
    throw IoError(manifest_path.string() + ": " + e.what());
  }
}

SuccessProfile load_success_profile(const std::filesystem::path& path) {
  SuccessProfile profile;
  for (const std::string& line : read_csv_body(path, "eef_position_error_m,success_rate")) {
    const std::vector<double> fields = parse_csv_numbers(line, 2, path);
    profile.eef_error_m.push_back(fields[0]);
    profile.success_rate.push_back(fields[1]);
  }
  try {
    profile.check_valid();
  } catch (const ConfigError& e) {
    throw IoError(path.string() + ": " + e.what());
  }
  return profile;
}

void save_success_profile(const std::filesystem::path& path, const SuccessProfile& profile) {
  profile.check_valid();
  std::string out = "eef_position_error_m,success_rate\n";
  for (std::size_t i = 0; i < profile.eef_error_m.size(); ++i) {
    out += format_double(profile.eef_error_m[i]) + "," + format_double(profile.success_rate[i]) +
           "\n";
  }
  write_text_atomic(path, out);
}

void save_sweep_csv(const std::filesystem::path& path, const std::vector<SweepCell>& cells,
                    std::uint64_t seed) {
  std::string out = "# seed=" + std::to_string(seed) + "\n";
  out += "distance_m,magnitude,mean_t_err_m,std_t_err_m,mean_r_err_rad,std_r_err_rad\n";
  for (const SweepCell& c : cells) {
    out += format_double(c.distance_m) + "," + format_double(c.magnitude) + "," +
           format_double(c.mean_translation_err_m) + "," + format_double(c.std_translation_err_m) +
           "," + format_double(c.mean_rotation_err_rad) + "," +
           format_double(c.std_rotation_err_rad) + "\n";
  }
  write_text_atomic(path, out);
}

std::vector<SweepCell> load_sweep_csv(const std::filesystem::path& path) {
  std::vector<SweepCell> cells;
  for (const std::string& line : read_csv_body(
           path, "distance_m,magnitude,mean_t_err_m,std_t_err_m,mean_r_err_rad,std_r_err_rad")) {
    const std::vector<double> f = parse_csv_numbers(line, 6, path);
    cells.push_back({f[0], f[1], f[2], f[3], f[4], f[5]});
  }
  return cells;
}

void save_success_curve_csv(const std::filesystem::path& path,
                            const std::vector<SuccessCurvePoint>& curve, std::uint64_t seed) {
  std::string out = "# seed=" + std::to_string(seed) + "\n";
  out += "magnitude,expected_success\n";
  for (const SuccessCurvePoint& p : curve) {
    out += format_double(p.magnitude) + "," + format_double(p.expected_success) + "\n";
  }
  write_text_atomic(path, out);
}

}  // namespace ttx
