#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "ttx/pointcloud.hpp"
#include "ttx/se3.hpp"

namespace ttx {

// z-rotation symmetry of an object about its canonical z-axis.
struct SymmetrySpec {
  enum class Kind { None, Finite, Infinite };
  Kind kind = Kind::None;
  int order = 1;               // Finite only, >= 2
  bool geometry_only = false;  // shape is symmetric but texture breaks it

  void check_valid() const;
};

enum class ObjectCategory { NonSym, InfSym, InfSymGeo, NSym, NSymGeo };

inline constexpr ObjectCategory kAllCategories[] = {
    ObjectCategory::NonSym, ObjectCategory::InfSym, ObjectCategory::InfSymGeo,
    ObjectCategory::NSym, ObjectCategory::NSymGeo};

const char* to_string(ObjectCategory category);
ObjectCategory category_from_string(const std::string& name);

// Densely sampled object surface in its canonical frame: the z-axis is the
// symmetry axis, the origin sits on it at mid-height. normals, when present,
// are outward unit normals parallel to surface.points; the renderer uses
// them to cull back-facing points so hidden geometry cannot bleed through
// sampling gaps in the pixel grid.
struct ObjectModel {
  PointCloud surface;
  std::vector<Eigen::Vector3d> normals;
  SymmetrySpec symmetry;
  ObjectCategory category = ObjectCategory::NonSym;
  double extent_m = 0.0;     // circumscribed diameter
  double spacing_m = 0.0;    // sampling spacing the surface was built with
};

struct Intrinsics {
  double fx = 0.0, fy = 0.0;
  double cx = 0.0, cy = 0.0;
  int width = 0, height = 0;
};

// T_RC maps camera-frame coordinates into the robot frame.
struct Camera {
  Intrinsics intrinsics;
  Transform extrinsic;

  void check_valid() const;
};

struct NoiseOptions {
  double depth_sigma_m = 0.0;  // Gaussian perturbation along the camera ray
  double color_jitter = 0.0;   // uniform per-channel RGB perturbation
};

// Row-major depth grid; entries <= 0 are invalid. color is empty or
// parallel to depth.
struct DepthImage {
  int width = 0, height = 0;
  std::vector<double> depth;
  std::vector<Eigen::Vector3d> color;

  bool has_colors() const { return !color.empty(); }
};

// One demonstration/deployment scene pair with ground truth. Clouds and
// object poses are in the camera frame.
struct ScenePair {
  PointCloud demo_cloud;
  PointCloud test_cloud;
  Transform object_pose_demo;   // T_CO demo
  Transform object_pose_test;   // T_CO test
  Transform true_delta_camera;  // object_pose_test * inverse(object_pose_demo)
  Camera camera;
  SymmetrySpec symmetry;
  ObjectCategory category = ObjectCategory::NonSym;
};

// A matched demo/test point pair in the camera frame.
struct Correspondence {
  Eigen::Vector3d demo;
  Eigen::Vector3d test;
};

// Synthetic matcher output with ground-truth labels for oracle tests.
struct CorrespondenceSet {
  std::vector<Correspondence> pairs;
  std::vector<int> inlier_indices;  // sorted indices into pairs
};

// Procedural object generator. Deterministic per (category, seed). Spacing
// controls surface sampling density; symmetry tolerances in tests are
// multiples of it.
ObjectModel build_object(ObjectCategory category, std::uint64_t seed, double spacing_m = 0.002);

// Simulated depth-camera view: cull back-facing points when the model
// carries normals, project the rest, keep the nearest per pixel, and return
// the kept points (exact surface samples) in the camera frame with optional
// depth noise and color jitter.
PointCloud render_partial_view(const ObjectModel& model, const Transform& object_pose,
                               const Camera& camera, const NoiseOptions& noise,
                               std::uint64_t seed);

// Draw a demo pose uniformly in the workspace (uniform z-orientation) and a
// test pose that differs by Rz(u), |u| <= max_z_rotation, about the world
// z-axis through the object center plus a fresh uniform position. Poses must
// keep the object footprint inside the workspace and every surface point
// visible in the image; rejection-sampled with a 10,000-attempt cap.
ScenePair sample_scene_pair(const ObjectModel& model, const Camera& camera,
                            const Aabb& workspace, double max_z_rotation,
                            const NoiseOptions& noise, std::uint64_t seed);

// Synthetic feature-matcher stand-in: inliers are true correspondences with
// isotropic Gaussian noise, outliers pair demo points with uniform points in
// the test cloud's bounding box. Order is shuffled; labels are returned for
// oracle tests.
CorrespondenceSet make_correspondences(const ScenePair& pair, int count, double inlier_ratio,
                                       double inlier_noise_sigma, std::uint64_t seed);

// Pinhole back-projection of valid pixels (rays through pixel centers).
PointCloud backproject_depth(const DepthImage& depth, const Camera& camera);

// Inverse ingestion path: z-buffer a camera-frame cloud into a depth image.
DepthImage depth_image_from_cloud(const PointCloud& cloud, const Camera& camera);

// 640x480 camera 0.8 m from the workspace center, looking at it.
Camera default_camera();

// 0.30 m x 0.75 m tabletop region in front of the robot, z = 0.
Aabb default_workspace();

constexpr double kDefaultMaxZRotation = M_PI / 4.0;

}  // namespace ttx
