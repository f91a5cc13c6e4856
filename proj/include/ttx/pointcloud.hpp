#pragma once

#include <vector>

#include <Eigen/Core>

#include "ttx/errors.hpp"
#include "ttx/se3.hpp"

namespace ttx {

// Unordered set of 3D points in meters, with optional per-point RGB colors
// in [0, 1]. colors is either empty or exactly points.size().
struct PointCloud {
  std::vector<Eigen::Vector3d> points;
  std::vector<Eigen::Vector3d> colors;

  bool has_colors() const { return !colors.empty(); }
  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }

  void check_valid() const {
    if (!colors.empty() && colors.size() != points.size()) {
      throw ConfigError("PointCloud: colors must be empty or match points in size");
    }
  }
};

inline Eigen::Vector3d centroid(const PointCloud& cloud) {
  if (cloud.empty()) throw DegenerateGeometry("centroid: empty cloud");
  Eigen::Vector3d sum = Eigen::Vector3d::Zero();
  for (const auto& p : cloud.points) sum += p;
  return sum / static_cast<double>(cloud.size());
}

inline PointCloud transformed(const PointCloud& cloud, const Transform& t) {
  PointCloud out = cloud;
  for (auto& p : out.points) p = t.rotation * p + t.translation;
  return out;
}

struct Aabb {
  Eigen::Vector3d min = Eigen::Vector3d::Zero();
  Eigen::Vector3d max = Eigen::Vector3d::Zero();
};

inline Aabb bounding_box(const PointCloud& cloud) {
  if (cloud.empty()) throw DegenerateGeometry("bounding_box: empty cloud");
  Aabb box{cloud.points.front(), cloud.points.front()};
  for (const auto& p : cloud.points) {
    box.min = box.min.cwiseMin(p);
    box.max = box.max.cwiseMax(p);
  }
  return box;
}

}  // namespace ttx
