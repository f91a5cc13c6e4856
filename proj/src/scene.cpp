#include "ttx/scene.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

#include <Eigen/Geometry>

#include "ttx/errors.hpp"
#include "ttx/random.hpp"

namespace ttx {

void SymmetrySpec::check_valid() const {
  if (kind == Kind::Finite && order < 2) {
    throw ConfigError("SymmetrySpec: finite symmetry order must be >= 2");
  }
}

void Camera::check_valid() const {
  if (intrinsics.fx <= 0.0 || intrinsics.fy <= 0.0) {
    throw ConfigError("Camera: focal lengths must be positive");
  }
  if (intrinsics.width < 16 || intrinsics.height < 16) {
    throw ConfigError("Camera: resolution must be at least 16x16");
  }
}

const char* to_string(ObjectCategory category) {
  switch (category) {
    case ObjectCategory::NonSym: return "non-sym";
    case ObjectCategory::InfSym: return "inf-sym";
    case ObjectCategory::InfSymGeo: return "inf-sym-geo";
    case ObjectCategory::NSym: return "n-sym";
    case ObjectCategory::NSymGeo: return "n-sym-geo";
  }
  return "unknown";
}

ObjectCategory category_from_string(const std::string& name) {
  for (ObjectCategory c : kAllCategories) {
    if (name == to_string(c)) return c;
  }
  throw ConfigError("unknown object category: " + name);
}

namespace {

using ColorFn = std::function<Eigen::Vector3d(const Eigen::Vector3d&)>;

// Collects surface samples together with their outward unit normals.
struct Sink {
  PointCloud& cloud;
  std::vector<Eigen::Vector3d>& normals;

  void add(const Eigen::Vector3d& p, const Eigen::Vector3d& n, const ColorFn& color) {
    cloud.points.push_back(p);
    cloud.colors.push_back(color(p));
    normals.push_back(n);
  }
};

// Circle of points at height z; angular spacing <= spacing_m of arc. slope is
// the wall gradient dr/dz, so the outward normal tilts toward -z when the
// body widens upward.
void add_ring(Sink& out, double radius, double z, double spacing, double slope,
              const ColorFn& color) {
  if (radius < 1e-9) {
    out.add({0.0, 0.0, z}, {0.0, 0.0, z >= 0.0 ? 1.0 : -1.0}, color);
    return;
  }
  const int n = std::max(3, static_cast<int>(std::ceil(2.0 * M_PI * radius / spacing)));
  for (int k = 0; k < n; ++k) {
    const double a = 2.0 * M_PI * k / n;
    const double c = std::cos(a);
    const double s = std::sin(a);
    out.add({radius * c, radius * s, z}, Eigen::Vector3d(c, s, -slope).normalized(), color);
  }
}

// Flat disk (annulus down to the center) at height z with normal (0,0,up).
void add_cap(Sink& out, double radius, double z, double spacing, double up,
             const ColorFn& color) {
  const Eigen::Vector3d n(0.0, 0.0, up);
  for (double r = radius; r > 0.5 * spacing; r -= spacing) {
    const int nk = std::max(3, static_cast<int>(std::ceil(2.0 * M_PI * r / spacing)));
    for (int k = 0; k < nk; ++k) {
      const double a = 2.0 * M_PI * k / nk;
      out.add({r * std::cos(a), r * std::sin(a), z}, n, color);
    }
  }
  out.add({0.0, 0.0, z}, n, color);
}

// Surface of revolution about z: radius(s) over s in [0,1], z in [-h/2, h/2],
// closed by end caps.
void add_revolution_body(Sink& out, const std::function<double(double)>& radius, double height,
                         double spacing, const ColorFn& color) {
  const int nz = std::max(2, static_cast<int>(std::ceil(height / spacing)) + 1);
  for (int i = 0; i < nz; ++i) {
    const double s = static_cast<double>(i) / (nz - 1);
    const double e = 1e-5;
    const double s0 = std::max(0.0, s - e);
    const double s1 = std::min(1.0, s + e);
    const double slope = (radius(s1) - radius(s0)) / ((s1 - s0) * height);
    add_ring(out, radius(s), (s - 0.5) * height, spacing, slope, color);
  }
  add_cap(out, radius(0.0), -0.5 * height, spacing, -1.0, color);
  add_cap(out, radius(1.0), 0.5 * height, spacing, 1.0, color);
}

// Rectangular patch sampled cell-centered (symmetric in both directions, so
// symmetry rotations map grids onto themselves exactly).
void add_grid_face(Sink& out, const Eigen::Vector3d& origin, const Eigen::Vector3d& edge_u,
                   const Eigen::Vector3d& edge_v, double spacing, const Eigen::Vector3d& normal,
                   const ColorFn& color) {
  const int nu = std::max(1, static_cast<int>(std::ceil(edge_u.norm() / spacing)));
  const int nv = std::max(1, static_cast<int>(std::ceil(edge_v.norm() / spacing)));
  for (int i = 0; i < nu; ++i) {
    for (int j = 0; j < nv; ++j) {
      const double fu = (i + 0.5) / nu;
      const double fv = (j + 0.5) / nv;
      out.add(origin + fu * edge_u + fv * edge_v, normal, color);
    }
  }
}

// Axis-aligned ellipsoid surface, latitude bands at the requested spacing.
void add_ellipsoid(Sink& out, const Eigen::Vector3d& center, const Eigen::Vector3d& semi,
                   double spacing, const ColorFn& color) {
  const double scale = semi.maxCoeff();
  const int n_lat = std::max(3, static_cast<int>(std::ceil(M_PI * scale / spacing)));
  for (int i = 0; i <= n_lat; ++i) {
    const double phi = -M_PI / 2.0 + M_PI * i / n_lat;
    const double ring_r = std::max(semi.x(), semi.y()) * std::cos(phi);
    const int n_th = std::max(1, static_cast<int>(std::ceil(2.0 * M_PI * std::abs(ring_r) / spacing)));
    for (int k = 0; k < n_th; ++k) {
      const double th = 2.0 * M_PI * k / n_th;
      const Eigen::Vector3d rel(semi.x() * std::cos(phi) * std::cos(th),
                                semi.y() * std::cos(phi) * std::sin(th),
                                semi.z() * std::sin(phi));
      const Eigen::Vector3d n(rel.x() / (semi.x() * semi.x()), rel.y() / (semi.y() * semi.y()),
                              rel.z() / (semi.z() * semi.z()));
      out.add(center + rel, n.normalized(), color);
    }
  }
}

Eigen::Vector3d random_color(Rng& rng) {
  // Keep channels away from 0/1 so jitter clamping stays mild.
  return {uniform_real(rng, 0.15, 0.85), uniform_real(rng, 0.15, 0.85),
          uniform_real(rng, 0.15, 0.85)};
}

// A color far from `base` in RGB distance, for symmetry-breaking texture.
Eigen::Vector3d contrasting_color(const Eigen::Vector3d& base) {
  Eigen::Vector3d c;
  for (int i = 0; i < 3; ++i) c[i] = base[i] > 0.5 ? base[i] - 0.5 : base[i] + 0.5;
  return c;
}

// Random smooth radius profile, normalized so max == 1. slope_cap bounds
// |d profile / ds| so walls never lean more than the camera's viewing rays:
// a bounded-slope surface of revolution is crossed once per ray (above the
// cap's elevation angle), which keeps back-face culling an exact visibility
// test with no hidden front-facing sheets.
std::function<double(double)> random_profile(Rng& rng, double slope_cap) {
  const double a1 = uniform_real(rng, 0.5, 2.0);
  const double a2 = uniform_real(rng, 1.0, 3.0);
  const double p1 = uniform_real(rng, 0.0, 2.0 * M_PI);
  double w1 = uniform_real(rng, 0.05, 0.12);
  double w2 = uniform_real(rng, 0.03, 0.08);
  // Normalization divides by peak >= 0.55, inflating slopes by at most
  // 1/0.55; budget the raw slope accordingly.
  const double raw_cap = 0.55 * slope_cap;
  const double raw_slope = w1 * a1 * M_PI + w2 * a2 * M_PI;
  if (raw_slope > raw_cap) {
    const double k = raw_cap / raw_slope;
    w1 *= k;
    w2 *= k;
  }
  auto raw = [=](double s) {
    return 0.75 + w1 * std::sin(a1 * M_PI * s + p1) + w2 * std::cos(a2 * M_PI * s);
  };
  double peak = 0.0;
  for (int i = 0; i <= 256; ++i) peak = std::max(peak, raw(i / 256.0));
  return [=](double s) { return raw(s) / peak; };
}

struct BodyDims {
  double height;
  double reach;  // max radial distance from the z-axis
};

// Given target extent (circumscribed diameter), split it into height and
// radial reach: extent == max(height, 2*reach) exactly.
BodyDims split_extent(Rng& rng, double extent) {
  const double rho = uniform_real(rng, 0.5, 1.6);  // 2*reach / height
  if (rho <= 1.0) return {extent, 0.5 * extent * rho};
  return {extent / rho, 0.5 * extent};
}

ObjectModel build_revolution_object(ObjectCategory category, Rng& rng, double spacing) {
  const double extent = uniform_real(rng, 0.05, 0.28);
  const BodyDims dims = split_extent(rng, extent);
  // Wall slope |dr/dz| <= 0.5: single wall crossing for rays steeper than
  // ~27 degrees of elevation (the default camera stays above ~31).
  const auto profile = random_profile(rng, 0.5 * dims.height / dims.reach);
  const double rmax = dims.reach;
  const Eigen::Vector3d base = random_color(rng);

  ObjectModel model;
  model.category = category;
  model.extent_m = extent;
  model.spacing_m = spacing;

  ColorFn color = [&](const Eigen::Vector3d&) { return base; };
  Eigen::Vector3d stripe_color = contrasting_color(base);
  const double stripe_start = uniform_real(rng, -M_PI, M_PI);
  const double stripe_width = uniform_real(rng, 0.4, 0.9);
  if (category == ObjectCategory::InfSymGeo) {
    // Angular color stripe: texture breaks the symmetry, geometry does not.
    color = [=](const Eigen::Vector3d& p) {
      double a = std::atan2(p.y(), p.x()) - stripe_start;
      a -= 2.0 * M_PI * std::floor(a / (2.0 * M_PI));
      return a < stripe_width ? stripe_color : base;
    };
  }

  Sink sink{model.surface, model.normals};
  add_revolution_body(sink, [&](double s) { return rmax * profile(s); }, dims.height, spacing,
                      color);

  model.symmetry.kind = SymmetrySpec::Kind::Infinite;
  model.symmetry.geometry_only = category == ObjectCategory::InfSymGeo;
  return model;
}

ObjectModel build_nonsym_object(Rng& rng, double spacing) {
  const double extent = uniform_real(rng, 0.05, 0.28);
  const BodyDims dims = split_extent(rng, extent);
  // The handle lobe extends the radial reach: reach = rmax + 1.5*a where a is
  // the lobe's radial semi-axis. Solve for the body radius.
  const double lobe_frac = uniform_real(rng, 0.5, 0.9);
  const double rmax = dims.reach / (1.0 + 1.5 * lobe_frac);
  const double lobe_a = rmax * lobe_frac;
  const auto profile = random_profile(rng, 0.5 * dims.height / rmax);
  const Eigen::Vector3d base = random_color(rng);
  const Eigen::Vector3d handle = contrasting_color(base);

  ObjectModel model;
  model.category = ObjectCategory::NonSym;
  model.extent_m = extent;
  model.spacing_m = spacing;

  const double h = dims.height;
  ColorFn body_color = [&](const Eigen::Vector3d& p) {
    const double shade = 0.85 + 0.15 * (p.z() / h + 0.5);
    return (base * shade).cwiseMin(1.0).cwiseMax(0.0);
  };
  Sink sink{model.surface, model.normals};
  add_revolution_body(sink, [&](double s) { return rmax * profile(s); }, h, spacing, body_color);

  // Off-axis lobe on +x at a random height in the middle band of the body.
  const double s0 = uniform_real(rng, 0.3, 0.7);
  const double z0 = (s0 - 0.5) * h;
  const Eigen::Vector3d lobe_center(rmax * profile(s0) + 0.5 * lobe_a, 0.0, z0);
  const Eigen::Vector3d semi(lobe_a, 0.6 * lobe_a, std::min(0.8 * lobe_a, 0.35 * h));
  add_ellipsoid(sink, lobe_center, semi, spacing,
                [&](const Eigen::Vector3d&) { return handle; });

  model.symmetry.kind = SymmetrySpec::Kind::None;
  return model;
}

ObjectModel build_prism_object(ObjectCategory category, Rng& rng, double spacing) {
  const double extent = uniform_real(rng, 0.05, 0.28);
  const BodyDims dims = split_extent(rng, extent);
  const int order = (rng() & 1) ? 4 : 2;
  // Cross-section: square for order 4, distinctly non-square for order 2.
  // reach is the circumscribed radius 0.5*hypot(wx, wy).
  const double aspect = order == 4 ? 1.0 : uniform_real(rng, 1.4, 1.9);
  const double wy = 2.0 * dims.reach / std::hypot(aspect, 1.0);
  const double wx = aspect * wy;
  const double h = dims.height;
  const Eigen::Vector3d base = random_color(rng);
  const Eigen::Vector3d marked = contrasting_color(base);

  ObjectModel model;
  model.category = category;
  model.extent_m = extent;
  model.spacing_m = spacing;

  const ColorFn base_color = [&](const Eigen::Vector3d&) { return base; };
  Sink sink{model.surface, model.normals};

  // Side faces: template +x face rotated by the symmetry step, so the sampled
  // set maps onto itself exactly under Rz(2*pi/order). The template's outward
  // normal is +x and rotates with the face.
  PointCloud face;
  std::vector<Eigen::Vector3d> face_normals;
  Sink face_sink{face, face_normals};
  add_grid_face(face_sink, {0.5 * wx, -0.5 * wy, -0.5 * h}, {0.0, wy, 0.0}, {0.0, 0.0, h},
                spacing, Eigen::Vector3d::UnitX(), base_color);
  // Rectangular cross-section: the +/-y faces have width wx, not wy.
  PointCloud yface;
  std::vector<Eigen::Vector3d> yface_normals;
  Sink yface_sink{yface, yface_normals};
  if (order == 2) {
    add_grid_face(yface_sink, {0.5 * wy, -0.5 * wx, -0.5 * h}, {0.0, wx, 0.0}, {0.0, 0.0, h},
                  spacing, Eigen::Vector3d::UnitX(), base_color);
  }
  const int n_faces = 4;
  for (int f = 0; f < n_faces; ++f) {
    const double step = 2.0 * M_PI * f / n_faces;
    const Rotation rz = rotation_about_z(step);
    const bool swap_wh = (order == 2) && (f % 2 == 1);
    const Eigen::Vector3d face_color =
        (category == ObjectCategory::NSymGeo && f == 0) ? marked : base;
    const PointCloud& tmpl = swap_wh ? yface : face;
    const Eigen::Vector3d n = rz * Eigen::Vector3d::UnitX();
    for (const auto& p : tmpl.points) {
      sink.add(rz * p, n, [&](const Eigen::Vector3d&) { return face_color; });
    }
  }

  // Top and bottom: cell-centered grids are symmetric under the prism's
  // rotation order by construction.
  add_grid_face(sink, {-0.5 * wx, -0.5 * wy, 0.5 * h}, {wx, 0.0, 0.0}, {0.0, wy, 0.0}, spacing,
                Eigen::Vector3d::UnitZ(), base_color);
  add_grid_face(sink, {-0.5 * wx, -0.5 * wy, -0.5 * h}, {wx, 0.0, 0.0}, {0.0, wy, 0.0}, spacing,
                -Eigen::Vector3d::UnitZ(), base_color);

  model.symmetry.kind = SymmetrySpec::Kind::Finite;
  model.symmetry.order = order;
  model.symmetry.geometry_only = category == ObjectCategory::NSymGeo;
  return model;
}

}  // namespace

ObjectModel build_object(ObjectCategory category, std::uint64_t seed, double spacing_m) {
  if (spacing_m <= 0.0) throw ConfigError("build_object: spacing must be positive");
  Rng rng = make_rng(mix_seed(seed, static_cast<std::uint64_t>(category) + 11));
  ObjectModel model;
  switch (category) {
    case ObjectCategory::NonSym:
      model = build_nonsym_object(rng, spacing_m);
      break;
    case ObjectCategory::InfSym:
    case ObjectCategory::InfSymGeo:
      model = build_revolution_object(category, rng, spacing_m);
      break;
    case ObjectCategory::NSym:
    case ObjectCategory::NSymGeo:
      model = build_prism_object(category, rng, spacing_m);
      break;
    default:
      throw ConfigError("build_object: unknown category");
  }
  model.surface.check_valid();
  model.symmetry.check_valid();
  if (model.normals.size() != model.surface.size()) {
    throw ConfigError("build_object: normals must parallel the surface samples");
  }
  return model;
}

namespace {

// Minimum cosine between the inward view ray and the surface normal for a
// sample to count as visible (see the culling comment in render_partial_view).
constexpr double kGrazingMargin = 0.25;

inline bool project_pixel(const Intrinsics& intr, const Eigen::Vector3d& q, double& u, double& v) {
  if (q.z() <= 0.0) return false;
  u = intr.fx * q.x() / q.z() + intr.cx;
  v = intr.fy * q.y() / q.z() + intr.cy;
  return u >= 0.0 && u < intr.width && v >= 0.0 && v < intr.height;
}

}  // namespace

PointCloud render_partial_view(const ObjectModel& model, const Transform& object_pose,
                               const Camera& camera, const NoiseOptions& noise,
                               std::uint64_t seed) {
  camera.check_valid();
  if (model.surface.empty()) throw DegenerateGeometry("render_partial_view: empty model surface");
  const bool use_normals = !model.normals.empty();
  if (use_normals && model.normals.size() != model.surface.size()) {
    throw ConfigError("render_partial_view: normals must parallel the surface samples");
  }

  const Intrinsics& intr = camera.intrinsics;
  const int w = intr.width;
  const int h = intr.height;
  std::vector<int> winner(static_cast<std::size_t>(w) * h, -1);
  std::vector<double> zbuf(static_cast<std::size_t>(w) * h,
                           std::numeric_limits<double>::infinity());
  std::vector<Eigen::Vector3d> cam_pts(model.surface.size());

  bool any_in_front = false;
  for (std::size_t i = 0; i < model.surface.size(); ++i) {
    const Eigen::Vector3d q =
        object_pose.rotation * model.surface.points[i] + object_pose.translation;
    cam_pts[i] = q;
    if (q.z() > 0.0) any_in_front = true;
    // Back-face culling with a grazing margin: without it, hidden geometry
    // bleeds through sampling gaps in the pixel grid and the visible set
    // stops being a function of the surface alone (symmetry-invariance would
    // break). The margin also drops extreme-grazing samples whose pixel
    // assignment is unstable — a pixel's footprint on a near-tangent surface
    // stretches without bound.
    if (use_normals &&
        (object_pose.rotation * model.normals[i]).dot(q) > -kGrazingMargin * q.norm()) {
      continue;
    }
    double u = 0.0, v = 0.0;
    if (!project_pixel(intr, q, u, v)) continue;
    const std::size_t idx =
        static_cast<std::size_t>(static_cast<int>(v)) * w + static_cast<int>(u);
    if (q.z() < zbuf[idx]) {
      zbuf[idx] = q.z();
      winner[idx] = static_cast<int>(i);
    }
  }
  if (!any_in_front) {
    throw DegenerateGeometry("render_partial_view: object fully behind camera");
  }

  PointCloud out;
  Rng rng = make_rng(mix_seed(seed, 0x7e6d));
  const bool colored = model.surface.has_colors();
  for (std::size_t idx = 0; idx < winner.size(); ++idx) {
    const int i = winner[idx];
    if (i < 0) continue;
    Eigen::Vector3d q = cam_pts[static_cast<std::size_t>(i)];
    if (noise.depth_sigma_m > 0.0) {
      // A depth sensor errs along the viewing ray: scale the point radially.
      const double dz = gaussian(rng, noise.depth_sigma_m);
      q *= (q.z() + dz) / q.z();
    }
    out.points.push_back(q);
    if (colored) {
      Eigen::Vector3d c = model.surface.colors[static_cast<std::size_t>(i)];
      if (noise.color_jitter > 0.0) {
        for (int k = 0; k < 3; ++k) c[k] += uniform_real(rng, -noise.color_jitter, noise.color_jitter);
        c = c.cwiseMin(1.0).cwiseMax(0.0);
      }
      out.colors.push_back(c);
    }
  }
  if (out.empty()) throw DegenerateGeometry("render_partial_view: empty visible set");
  return out;
}

namespace {

// All sampled surface points must project inside the image: the pair
// generator's stand-in for the "object fully visible" requirement.
bool fully_visible(const std::vector<Eigen::Vector3d>& canonical, const Transform& t_co,
                   const Intrinsics& intr) {
  for (const auto& p : canonical) {
    const Eigen::Vector3d q = t_co.rotation * p + t_co.translation;
    double u = 0.0, v = 0.0;
    if (!project_pixel(intr, q, u, v)) return false;
  }
  return true;
}

// Object footprint must stay inside the workspace: per-axis margin of half
// the extent in x/y. Degenerate axes accept only the midpoint, which uniform
// sampling hits exactly when the axis has zero size.
bool inside_with_margin(const Aabb& box, const Eigen::Vector3d& p, double extent) {
  for (int a = 0; a < 2; ++a) {
    const double lo = box.min[a] + 0.5 * extent;
    const double hi = box.max[a] - 0.5 * extent;
    if (lo <= hi) {
      if (p[a] < lo || p[a] > hi) return false;
    } else {
      if (p[a] != 0.5 * (box.min[a] + box.max[a])) return false;
    }
  }
  return true;
}

Eigen::Vector3d sample_in_box(Rng& rng, const Aabb& box) {
  Eigen::Vector3d p;
  for (int a = 0; a < 3; ++a) {
    p[a] = box.min[a] == box.max[a] ? box.min[a] : uniform_real(rng, box.min[a], box.max[a]);
  }
  return p;
}

// Rejection-sample a position for a fixed orientation.
Transform sample_placement(Rng& rng, const ObjectModel& model, const Camera& camera,
                           const Aabb& workspace, const Rotation& rotation) {
  const Transform t_cr = inverse(camera.extrinsic);
  for (int attempt = 0; attempt < 10000; ++attempt) {
    const Eigen::Vector3d p = sample_in_box(rng, workspace);
    if (!inside_with_margin(workspace, p, model.extent_m)) continue;
    const Transform t_ro{rotation, p};
    const Transform t_co = compose(t_cr, t_ro);
    if (!fully_visible(model.surface.points, t_co, camera.intrinsics)) continue;
    return t_ro;
  }
  throw DegenerateGeometry(
      "sample_scene_pair: rejection sampling exceeded 10,000 attempts "
      "(workspace too small for extent or object not fully visible)");
}

}  // namespace

ScenePair sample_scene_pair(const ObjectModel& model, const Camera& camera,
                            const Aabb& workspace, double max_z_rotation,
                            const NoiseOptions& noise, std::uint64_t seed) {
  camera.check_valid();
  if (max_z_rotation < 0.0 || max_z_rotation > M_PI) {
    throw ConfigError("sample_scene_pair: max_z_rotation must lie in [0, pi]");
  }
  if ((workspace.max - workspace.min).minCoeff() < 0.0) {
    throw ConfigError("sample_scene_pair: workspace box has negative size");
  }

  Rng rng = make_rng(mix_seed(seed, 17));
  const double yaw = uniform_real(rng, -M_PI, M_PI);
  const Transform t_ro_demo =
      sample_placement(rng, model, camera, workspace, rotation_about_z(yaw));

  const double u = uniform_real(rng, -max_z_rotation, max_z_rotation);
  const Rotation test_rotation = rotation_about_z(u) * t_ro_demo.rotation;
  const Transform t_ro_test = sample_placement(rng, model, camera, workspace, test_rotation);

  const Transform t_cr = inverse(camera.extrinsic);
  ScenePair pair;
  pair.camera = camera;
  pair.symmetry = model.symmetry;
  pair.category = model.category;
  pair.object_pose_demo = compose(t_cr, t_ro_demo);
  pair.object_pose_test = compose(t_cr, t_ro_test);
  pair.true_delta_camera = compose(pair.object_pose_test, inverse(pair.object_pose_demo));
  pair.demo_cloud =
      render_partial_view(model, pair.object_pose_demo, camera, noise, mix_seed(seed, 1001));
  pair.test_cloud =
      render_partial_view(model, pair.object_pose_test, camera, noise, mix_seed(seed, 1002));
  return pair;
}

CorrespondenceSet make_correspondences(const ScenePair& pair, int count, double inlier_ratio,
                                       double inlier_noise_sigma, std::uint64_t seed) {
  if (count < 3) throw ConfigError("make_correspondences: count must be >= 3");
  if (!(inlier_ratio > 0.0 && inlier_ratio <= 1.0)) {
    throw ConfigError("make_correspondences: inlier_ratio must lie in (0, 1]");
  }
  if (inlier_noise_sigma < 0.0) {
    throw ConfigError("make_correspondences: noise sigma must be non-negative");
  }
  if (static_cast<std::size_t>(count) > pair.demo_cloud.size()) {
    throw DegenerateGeometry("make_correspondences: count exceeds available demo points");
  }

  Rng rng = make_rng(mix_seed(seed, 23));
  const int n_inliers = std::clamp<int>(static_cast<int>(std::lround(count * inlier_ratio)),
                                        0, count);
  const std::vector<int> chosen =
      sample_distinct(rng, static_cast<int>(pair.demo_cloud.size()), count);
  const Aabb box = bounding_box(pair.test_cloud);
  const Transform& delta = pair.true_delta_camera;

  std::vector<Correspondence> pairs(static_cast<std::size_t>(count));
  std::vector<char> is_inlier(static_cast<std::size_t>(count), 0);
  for (int i = 0; i < count; ++i) {
    const Eigen::Vector3d p = pair.demo_cloud.points[static_cast<std::size_t>(chosen[i])];
    Eigen::Vector3d q;
    if (i < n_inliers) {
      q = delta.rotation * p + delta.translation + gaussian3(rng, inlier_noise_sigma);
      is_inlier[static_cast<std::size_t>(i)] = 1;
    } else {
      q = sample_in_box(rng, box);
    }
    pairs[static_cast<std::size_t>(i)] = {p, q};
  }

  // Fisher-Yates shuffle, labels carried along.
  for (int i = count - 1; i > 0; --i) {
    std::uniform_int_distribution<int> d(0, i);
    const int j = d(rng);
    std::swap(pairs[static_cast<std::size_t>(i)], pairs[static_cast<std::size_t>(j)]);
    std::swap(is_inlier[static_cast<std::size_t>(i)], is_inlier[static_cast<std::size_t>(j)]);
  }

  CorrespondenceSet out;
  out.pairs = std::move(pairs);
  for (int i = 0; i < count; ++i) {
    if (is_inlier[static_cast<std::size_t>(i)]) out.inlier_indices.push_back(i);
  }
  return out;
}

PointCloud backproject_depth(const DepthImage& depth, const Camera& camera) {
  camera.check_valid();
  const Intrinsics& intr = camera.intrinsics;
  if (depth.width != intr.width || depth.height != intr.height ||
      depth.depth.size() != static_cast<std::size_t>(depth.width) * depth.height) {
    throw ConfigError("backproject_depth: image dimensions do not match the camera");
  }
  if (!depth.color.empty() && depth.color.size() != depth.depth.size()) {
    throw ConfigError("backproject_depth: color plane size mismatch");
  }

  PointCloud out;
  for (int py = 0; py < depth.height; ++py) {
    for (int px = 0; px < depth.width; ++px) {
      const std::size_t idx = static_cast<std::size_t>(py) * depth.width + px;
      const double d = depth.depth[idx];
      if (!(d > 0.0)) continue;
      const double x = (px + 0.5 - intr.cx) / intr.fx * d;
      const double y = (py + 0.5 - intr.cy) / intr.fy * d;
      out.points.emplace_back(x, y, d);
      if (!depth.color.empty()) out.colors.push_back(depth.color[idx]);
    }
  }
  if (out.empty()) throw DegenerateGeometry("backproject_depth: no valid pixels");
  return out;
}

DepthImage depth_image_from_cloud(const PointCloud& cloud, const Camera& camera) {
  camera.check_valid();
  cloud.check_valid();
  const Intrinsics& intr = camera.intrinsics;
  DepthImage img;
  img.width = intr.width;
  img.height = intr.height;
  img.depth.assign(static_cast<std::size_t>(intr.width) * intr.height, 0.0);
  if (cloud.has_colors()) {
    img.color.assign(img.depth.size(), Eigen::Vector3d::Zero());
  }
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const Eigen::Vector3d& q = cloud.points[i];
    double u = 0.0, v = 0.0;
    if (!project_pixel(intr, q, u, v)) continue;
    const std::size_t idx =
        static_cast<std::size_t>(static_cast<int>(v)) * intr.width + static_cast<int>(u);
    if (img.depth[idx] <= 0.0 || q.z() < img.depth[idx]) {
      img.depth[idx] = q.z();
      if (cloud.has_colors()) img.color[idx] = cloud.colors[i];
    }
  }
  return img;
}

Camera default_camera() {
  Camera cam;
  cam.intrinsics = {525.0, 525.0, 319.5, 239.5, 640, 480};
  const Eigen::Vector3d center(0.45, 0.0, 0.0);
  const Eigen::Vector3d dir = Eigen::Vector3d(-0.5, 0.0, 0.6).normalized();
  const Eigen::Vector3d pos = center + 0.8 * dir;  // 0.8 m from the center
  const Eigen::Vector3d z = (center - pos).normalized();
  const Eigen::Vector3d x = z.cross(Eigen::Vector3d::UnitZ()).normalized();
  const Eigen::Vector3d y = z.cross(x);
  Rotation r;
  r.col(0) = x;
  r.col(1) = y;
  r.col(2) = z;
  cam.extrinsic = {r, pos};
  return cam;
}

Aabb default_workspace() {
  // 0.30 m deep x 0.75 m wide tabletop patch in front of the robot.
  return {{0.30, -0.375, 0.0}, {0.60, 0.375, 0.0}};
}

}  // namespace ttx
