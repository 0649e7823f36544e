#pragma once

// Analytic forward ray tracer for scenes built from parallel-faced glass
// slabs, textured walls, and simple primitives. Refraction follows Snell's
// law exactly; reflection is a Schlick-weighted single bounce plus a bright
// area-light highlight. Used to generate posed datasets with exact ground
// truth for glass geometry and depth.

#include <optional>
#include <string>
#include <vector>

#include "glassfield/camera.hpp"
#include "glassfield/common.hpp"
#include "glassfield/image.hpp"

namespace gf::oracle {

struct RefractResult {
  Vec3 direction;
  bool total_internal_reflection = false;
};

// d_in and n unit length, n on the incident side (d_in . n <= 0).
// eta_ratio = n_incident / n_transmitted.
RefractResult snell_refract(const Vec3& d_in, const Vec3& n, double eta_ratio);

// Schlick approximation; cos_i is the incident cosine, f0 from the index.
double schlick_reflectance(double cos_i, double ior);

struct Texture {
  enum class Kind { Solid, Checker, Gradient };
  Kind kind = Kind::Solid;
  Vec3 color_a{0.8, 0.8, 0.8};
  Vec3 color_b{0.2, 0.2, 0.2};
  double cell = 10.0;  // checker cell size, cm

  Vec3 sample(double u, double v) const;
};

// Parallel-faced glass pane. `point` lies on the front face; `normal` is the
// unit outward normal of that face; the back face is offset by `thickness`
// along -normal. Finite extent half_u/half_v along the in-plane axes.
struct Slab {
  Vec3 point;
  Vec3 normal;
  double thickness = 1.0;  // cm
  double ior = 1.45;
  double half_u = 1e9;
  double half_v = 1e9;

  Vec3 u_axis() const;
  Vec3 v_axis() const;
};

struct Quad {  // one-sided textured rectangle
  Vec3 origin;
  Vec3 u_axis, v_axis;  // not necessarily unit; span the rectangle
  Texture tex;
};

struct Sphere {
  Vec3 center;
  double radius = 1.0;
  Texture tex;
};

struct Box {  // axis-aligned
  Vec3 min, max;
  Texture tex;
};

struct AreaLight {
  Vec3 center{0, 0, 1e6};
  double radius = 5.0;
  double intensity = 6.0;  // radiance seen by specular rays that hit it
};

struct SceneSpec {
  std::string name = "scene";
  std::vector<Slab> slabs;
  std::vector<Quad> walls;
  std::vector<Sphere> spheres;
  std::vector<Box> boxes;
  AreaLight light;
  double reflection_scale = 1.0;  // multiplier on the Schlick reflectance
  double ambient = 0.4;
  double diffuse = 0.6;
  Vec3 background{1, 1, 1};
  int max_glass_traversals = 8;

  Vec3 aabb_min{-30, -30, -30}, aabb_max{30, 30, 30};
  double scene_extent() const;  // largest AABB side, cm

  void validate() const;
};

struct SlabTraversal {
  bool intersected = false;  // front-face hit inside the finite extent
  bool tir = false;
  Ray exit;                // continuation ray past the slab
  Vec3 entry_point;
  double entry_t = 0;      // along the incoming ray
  double inside_length = 0;
  double cos_incident = 0;
};

// Exact two-interface traversal: entry refraction, straight segment inside
// the glass, exit refraction through the parallel back face. Grazing or
// missed slabs pass through unchanged (intersected=false).
SlabTraversal trace_through_slab(const Ray& ray, const Slab& slab);

struct TraceResult {
  Vec3 color{0, 0, 0};
  Vec3 reflection{0, 0, 0};  // view-dependent part of `color`
  double depth = -1;         // cm along the refracted path, first non-glass hit
  bool truncated = false;    // glass traversal budget exhausted
};

TraceResult trace_scene(const Ray& ray, const SceneSpec& scene);

struct ViewRender {
  Image color;
  Image reflection;
  std::vector<double> depth;  // cm, row-major, -1 where undefined
  int truncated_rays = 0;
};

ViewRender render_view(const SceneSpec& scene, const Camera& cam);

// Evenly spread positions on an inward-facing orbit arc around `target`,
// jittered deterministically by seed.
struct Trajectory {
  Vec3 target{0, 0, 0};
  double radius = 55.0;
  double azimuth_min_deg = -180, azimuth_max_deg = 180;
  double elevation_min_deg = 5, elevation_max_deg = 40;
};

Camera make_orbit_camera(const Trajectory& traj, double azimuth_deg,
                         double elevation_deg, int width, int height,
                         double camera_angle_x, double near, double far);

struct GenerateConfig {
  int train_count = 200;
  int val_count = 25;
  int test_count = 25;
  int width = 800;
  int height = 800;
  uint64_t seed = 0;
  double camera_angle_x = 0.8552;  // ~49 degrees
  Trajectory trajectory;
  double near = 0, far = 0;  // 0: derive from scene bounds and trajectory
};

// Grid of exact surface points on each slab face, clipped to its extents.
std::vector<Vec3> glass_surface_points(const SceneSpec& scene, int per_face_side);

// Scene presets used by the CLI: "slab-checker", "showcase", "no-glass".
SceneSpec scene_preset(const std::string& name);

// JSON scene description (same schema the CLI documents).
SceneSpec scene_from_json(const std::string& json_text);
std::string scene_to_json(const SceneSpec& scene);

// Renders every split and writes the on-disk dataset (manifest, images,
// ground truth). Returns the manifest path.
std::string generate_dataset(const SceneSpec& scene, const GenerateConfig& cfg,
                             const std::string& out_dir);

}  // namespace gf::oracle
