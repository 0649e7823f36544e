#include "glassfield/oracle.hpp"

#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <limits>

#include "glassfield/dataset.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace gf::oracle {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kTMin = 1e-6;  // intersection epsilon, cm
}  // namespace

RefractResult snell_refract(const Vec3& d_in, const Vec3& n, double eta_ratio) {
  double cos_i = -d_in.dot(n);
  double sin2_t = eta_ratio * eta_ratio * std::max(0.0, 1.0 - cos_i * cos_i);
  if (sin2_t > 1.0) return {Vec3{}, true};
  double cos_t = std::sqrt(1.0 - sin2_t);
  Vec3 t = d_in * eta_ratio + n * (eta_ratio * cos_i - cos_t);
  return {t.normalized(), false};
}

double schlick_reflectance(double cos_i, double ior) {
  double f0 = (ior - 1.0) / (ior + 1.0);
  f0 *= f0;
  double m = 1.0 - std::abs(cos_i);
  double m2 = m * m;
  return f0 + (1.0 - f0) * m2 * m2 * m;
}

Vec3 Texture::sample(double u, double v) const {
  switch (kind) {
    case Kind::Solid:
      return color_a;
    case Kind::Checker: {
      int64_t iu = (int64_t)std::floor(u / cell);
      int64_t iv = (int64_t)std::floor(v / cell);
      return ((iu + iv) & 1) ? color_b : color_a;
    }
    case Kind::Gradient: {
      double s = v - std::floor(v);
      return color_a * (1.0 - s) + color_b * s;
    }
  }
  return color_a;
}

Vec3 Slab::u_axis() const {
  Vec3 ref = std::abs(normal.z) < 0.9 ? Vec3{0, 0, 1} : Vec3{1, 0, 0};
  return normal.cross(ref).normalized();
}
Vec3 Slab::v_axis() const { return normal.cross(u_axis()).normalized(); }

double SceneSpec::scene_extent() const {
  Vec3 d = aabb_max - aabb_min;
  return std::max({d.x, d.y, d.z});
}

void SceneSpec::validate() const {
  for (auto& s : slabs) {
    if (!(s.ior > 1.0))
      throw std::invalid_argument("scene: slab refractive index must exceed 1");
    if (!(s.thickness > 0))
      throw std::invalid_argument("scene: slab thickness must be positive");
    if (std::abs(s.normal.norm() - 1.0) > 1e-9)
      throw std::invalid_argument("scene: slab normal must be unit length");
  }
}

SlabTraversal trace_through_slab(const Ray& ray, const Slab& slab) {
  SlabTraversal out;
  out.exit = ray;

  // entry face: whichever of the two parallel planes the ray reaches first
  // with the normal against it
  double denom = ray.direction.dot(slab.normal);
  if (std::abs(denom) < 1e-12) return out;  // grazing: pass through unchanged
  Vec3 n_entry = denom < 0 ? slab.normal : -slab.normal;
  Vec3 front_pt = slab.point;
  Vec3 back_pt = slab.point - slab.normal * slab.thickness;
  Vec3 entry_pt3 = denom < 0 ? front_pt : back_pt;

  double t_entry = (entry_pt3 - ray.origin).dot(n_entry) /
                   ray.direction.dot(n_entry);
  if (t_entry < kTMin) return out;
  Vec3 p = ray.origin + ray.direction * t_entry;
  Vec3 rel = p - slab.point;
  if (std::abs(rel.dot(slab.u_axis())) > slab.half_u ||
      std::abs(rel.dot(slab.v_axis())) > slab.half_v)
    return out;

  out.intersected = true;
  out.entry_point = p;
  out.entry_t = t_entry;
  out.cos_incident = -ray.direction.dot(n_entry);

  auto inward = snell_refract(ray.direction, n_entry, 1.0 / slab.ior);
  if (inward.total_internal_reflection) {  // cannot happen entering from air
    out.tir = true;
    return out;
  }
  double cos_t = -inward.direction.dot(n_entry);
  double inside = slab.thickness / cos_t;
  Vec3 exit_p = p + inward.direction * inside;
  auto outward = snell_refract(inward.direction, n_entry, slab.ior);
  if (outward.total_internal_reflection) {
    out.tir = true;
    return out;
  }
  out.inside_length = inside;
  out.exit.origin = exit_p;
  out.exit.direction = outward.direction;
  out.exit.near = ray.near;
  out.exit.far = ray.far;
  return out;
}

namespace {

struct Hit {
  double t = kInf;
  Vec3 point;
  Vec3 normal;  // faces the ray
  Vec3 albedo;
  enum class Kind { None, Diffuse, Glass, Light } kind = Kind::None;
  int slab_index = -1;
};

bool hit_quad(const Ray& ray, const Quad& q, Hit& hit) {
  Vec3 n = q.u_axis.cross(q.v_axis).normalized();
  double denom = ray.direction.dot(n);
  if (std::abs(denom) < 1e-12) return false;
  double t = (q.origin - ray.origin).dot(n) / denom;
  if (t < kTMin || t >= hit.t) return false;
  Vec3 p = ray.origin + ray.direction * t;
  Vec3 rel = p - q.origin;
  double ulen2 = q.u_axis.dot(q.u_axis), vlen2 = q.v_axis.dot(q.v_axis);
  double su = rel.dot(q.u_axis) / ulen2;
  double sv = rel.dot(q.v_axis) / vlen2;
  if (su < 0 || su > 1 || sv < 0 || sv > 1) return false;
  hit.t = t;
  hit.point = p;
  hit.normal = denom < 0 ? n : -n;
  hit.albedo = q.tex.sample(su * std::sqrt(ulen2), sv * std::sqrt(vlen2));
  hit.kind = Hit::Kind::Diffuse;
  hit.slab_index = -1;
  return true;
}

bool hit_sphere_t(const Ray& ray, const Vec3& center, double radius, double& t) {
  Vec3 oc = ray.origin - center;
  double b = oc.dot(ray.direction);
  double c = oc.dot(oc) - radius * radius;
  double disc = b * b - c;
  if (disc < 0) return false;
  double s = std::sqrt(disc);
  double t0 = -b - s, t1 = -b + s;
  t = t0 > kTMin ? t0 : t1;
  return t > kTMin;
}

bool hit_sphere(const Ray& ray, const Sphere& sp, Hit& hit) {
  double t;
  if (!hit_sphere_t(ray, sp.center, sp.radius, t) || t >= hit.t) return false;
  hit.t = t;
  hit.point = ray.origin + ray.direction * t;
  Vec3 n = (hit.point - sp.center).normalized();
  hit.normal = n.dot(ray.direction) < 0 ? n : -n;
  // checker uses spherical angles scaled to cm along the equator
  double u = std::atan2(hit.point.y - sp.center.y, hit.point.x - sp.center.x) *
             sp.radius;
  double v = std::acos(std::clamp((hit.point.z - sp.center.z) / sp.radius, -1.0, 1.0)) *
             sp.radius;
  hit.albedo = sp.tex.sample(u, v);
  hit.kind = Hit::Kind::Diffuse;
  hit.slab_index = -1;
  return true;
}

bool hit_box(const Ray& ray, const Box& box, Hit& hit) {
  double t_near = -kInf, t_far = kInf;
  int axis = -1;
  const double o[3] = {ray.origin.x, ray.origin.y, ray.origin.z};
  const double d[3] = {ray.direction.x, ray.direction.y, ray.direction.z};
  const double mn[3] = {box.min.x, box.min.y, box.min.z};
  const double mx[3] = {box.max.x, box.max.y, box.max.z};
  for (int a = 0; a < 3; ++a) {
    if (std::abs(d[a]) < 1e-12) {
      if (o[a] < mn[a] || o[a] > mx[a]) return false;
      continue;
    }
    double t0 = (mn[a] - o[a]) / d[a], t1 = (mx[a] - o[a]) / d[a];
    if (t0 > t1) std::swap(t0, t1);
    if (t0 > t_near) { t_near = t0; axis = a; }
    t_far = std::min(t_far, t1);
    if (t_near > t_far) return false;
  }
  double t = t_near > kTMin ? t_near : t_far;
  if (t < kTMin || t >= hit.t || axis < 0) return false;
  hit.t = t;
  hit.point = ray.origin + ray.direction * t;
  Vec3 n{0, 0, 0};
  if (axis == 0) n.x = d[0] > 0 ? -1 : 1;
  if (axis == 1) n.y = d[1] > 0 ? -1 : 1;
  if (axis == 2) n.z = d[2] > 0 ? -1 : 1;
  hit.normal = n;
  double u = axis == 0 ? hit.point.y : hit.point.x;
  double v = axis == 2 ? hit.point.y : hit.point.z;
  hit.albedo = box.tex.sample(u, v);
  hit.kind = Hit::Kind::Diffuse;
  hit.slab_index = -1;
  return true;
}

bool hit_light(const Ray& ray, const AreaLight& light, Hit& hit) {
  double t;
  if (!hit_sphere_t(ray, light.center, light.radius, t) || t >= hit.t)
    return false;
  hit.t = t;
  hit.point = ray.origin + ray.direction * t;
  hit.kind = Hit::Kind::Light;
  hit.slab_index = -1;
  return true;
}

bool hit_slab_face(const Ray& ray, const Slab& slab, int index, Hit& hit) {
  double denom = ray.direction.dot(slab.normal);
  if (std::abs(denom) < 1e-12) return false;
  Vec3 n_entry = denom < 0 ? slab.normal : -slab.normal;
  Vec3 entry_pt = denom < 0 ? slab.point : slab.point - slab.normal * slab.thickness;
  double t = (entry_pt - ray.origin).dot(n_entry) / ray.direction.dot(n_entry);
  if (t < kTMin || t >= hit.t) return false;
  Vec3 p = ray.origin + ray.direction * t;
  Vec3 rel = p - slab.point;
  if (std::abs(rel.dot(slab.u_axis())) > slab.half_u ||
      std::abs(rel.dot(slab.v_axis())) > slab.half_v)
    return false;
  hit.t = t;
  hit.point = p;
  hit.normal = n_entry;
  hit.kind = Hit::Kind::Glass;
  hit.slab_index = index;
  return true;
}

Hit nearest_hit(const Ray& ray, const SceneSpec& scene, bool include_glass) {
  Hit hit;
  for (auto& q : scene.walls) hit_quad(ray, q, hit);
  for (auto& s : scene.spheres) hit_sphere(ray, s, hit);
  for (auto& b : scene.boxes) hit_box(ray, b, hit);
  hit_light(ray, scene.light, hit);
  if (include_glass)
    for (size_t i = 0; i < scene.slabs.size(); ++i)
      hit_slab_face(ray, scene.slabs[i], (int)i, hit);
  return hit;
}

Vec3 shade_diffuse(const SceneSpec& scene, const Hit& hit) {
  Vec3 to_light = (scene.light.center - hit.point).normalized();
  double lambert = std::max(0.0, hit.normal.dot(to_light));
  return hit.albedo * (scene.ambient + scene.diffuse * lambert);
}

// Radiance seen by a specular bounce: diffuse surfaces and the light only;
// glass panes are passed through (single-bounce model).
Vec3 mirror_world_radiance(const Ray& ray, const SceneSpec& scene) {
  Hit hit = nearest_hit(ray, scene, /*include_glass=*/false);
  if (hit.kind == Hit::Kind::Light)
    return Vec3{1, 1, 1} * scene.light.intensity;
  if (hit.kind == Hit::Kind::Diffuse) return shade_diffuse(scene, hit);
  return scene.background;
}

}  // namespace

TraceResult trace_scene(const Ray& ray, const SceneSpec& scene) {
  TraceResult res;
  Ray current = ray;
  double throughput = 1.0;
  double path_len = 0.0;
  for (int step = 0; step <= scene.max_glass_traversals; ++step) {
    Hit hit = nearest_hit(current, scene, true);
    if (hit.kind == Hit::Kind::None) {
      res.color += scene.background * throughput;
      return res;
    }
    if (hit.kind == Hit::Kind::Light) {
      res.color += Vec3{1, 1, 1} * (scene.light.intensity * throughput);
      res.depth = path_len + hit.t;
      return res;
    }
    if (hit.kind == Hit::Kind::Diffuse) {
      res.color += shade_diffuse(scene, hit) * throughput;
      res.depth = path_len + hit.t;
      return res;
    }
    // glass: Fresnel-weighted single-bounce reflection + refracted continuation
    if (step == scene.max_glass_traversals) {
      res.truncated = true;  // budget exhausted; drop the remaining path
      return res;
    }
    const Slab& slab = scene.slabs[hit.slab_index];
    double cos_i = -current.direction.dot(hit.normal);
    double refl = std::clamp(
        scene.reflection_scale * schlick_reflectance(cos_i, slab.ior), 0.0, 1.0);
    Vec3 rdir = current.direction + hit.normal * (2.0 * cos_i);
    Ray reflected{hit.point + rdir * kTMin, rdir.normalized(), current.near,
                  current.far};
    Vec3 bounce = mirror_world_radiance(reflected, scene) * (refl * throughput);
    res.color += bounce;
    res.reflection += bounce;

    auto traversal = trace_through_slab(current, slab);
    if (!traversal.intersected || traversal.tir) {
      // grazing the pane edge: continue past it without refraction
      Ray skip{hit.point + current.direction * kTMin, current.direction,
               current.near, current.far};
      path_len += hit.t + kTMin;
      current = skip;
      continue;
    }
    path_len += traversal.entry_t + traversal.inside_length;
    throughput *= (1.0 - refl);
    current = traversal.exit;
    current.origin += current.direction * kTMin;
  }
  return res;
}

ViewRender render_view(const SceneSpec& scene, const Camera& cam) {
  ViewRender out;
  out.color = Image(cam.width, cam.height);
  out.reflection = Image(cam.width, cam.height);
  out.depth.assign((size_t)cam.width * cam.height, -1.0);
  int truncated = 0;
#pragma omp parallel for schedule(dynamic, 4) reduction(+ : truncated)
  for (int y = 0; y < cam.height; ++y) {
    for (int x = 0; x < cam.width; ++x) {
      Ray ray = generate_ray(cam, x + 0.5, y + 0.5);
      auto traced = trace_scene(ray, scene);
      out.color.at(x, y, 0) = (float)traced.color.x;
      out.color.at(x, y, 1) = (float)traced.color.y;
      out.color.at(x, y, 2) = (float)traced.color.z;
      out.reflection.at(x, y, 0) = (float)traced.reflection.x;
      out.reflection.at(x, y, 1) = (float)traced.reflection.y;
      out.reflection.at(x, y, 2) = (float)traced.reflection.z;
      out.depth[(size_t)y * cam.width + x] = traced.depth;
      if (traced.truncated) truncated++;
    }
  }
  out.truncated_rays = truncated;
  return out;
}

Camera make_orbit_camera(const Trajectory& traj, double azimuth_deg,
                         double elevation_deg, int width, int height,
                         double camera_angle_x, double near, double far) {
  double az = azimuth_deg * M_PI / 180.0;
  double el = elevation_deg * M_PI / 180.0;
  Vec3 pos = traj.target + Vec3{std::sin(az) * std::cos(el),
                                -std::cos(az) * std::cos(el),
                                std::sin(el)} *
                               traj.radius;
  Vec3 forward = (traj.target - pos).normalized();
  Vec3 world_up{0, 0, 1};
  Vec3 right = forward.cross(world_up).normalized();
  Vec3 up = right.cross(forward).normalized();
  Camera cam;
  cam.width = width;
  cam.height = height;
  cam.camera_angle_x = camera_angle_x;
  cam.near = near;
  cam.far = far;
  // columns: right, up, -forward; translation = position
  cam.c2w = {right.x, up.x, -forward.x, pos.x,
             right.y, up.y, -forward.y, pos.y,
             right.z, up.z, -forward.z, pos.z,
             0,       0,    0,          1};
  return cam;
}

std::vector<Vec3> glass_surface_points(const SceneSpec& scene, int per_face_side) {
  std::vector<Vec3> pts;
  for (auto& s : scene.slabs) {
    Vec3 u = s.u_axis(), v = s.v_axis();
    for (int face = 0; face < 2; ++face) {
      Vec3 base = face == 0 ? s.point : s.point - s.normal * s.thickness;
      for (int i = 0; i < per_face_side; ++i)
        for (int j = 0; j < per_face_side; ++j) {
          double fu = (i + 0.5) / per_face_side * 2.0 - 1.0;
          double fv = (j + 0.5) / per_face_side * 2.0 - 1.0;
          pts.push_back(base + u * (fu * s.half_u) + v * (fv * s.half_v));
        }
    }
  }
  return pts;
}

// ---------------------------------------------------------------------------
// presets

namespace {

Texture solid(Vec3 c) {
  Texture t;
  t.kind = Texture::Kind::Solid;
  t.color_a = c;
  return t;
}
Texture checker(Vec3 a, Vec3 b, double cell) {
  Texture t;
  t.kind = Texture::Kind::Checker;
  t.color_a = a;
  t.color_b = b;
  t.cell = cell;
  return t;
}
Texture gradient(Vec3 a, Vec3 b) {
  Texture t;
  t.kind = Texture::Kind::Gradient;
  t.color_a = a;
  t.color_b = b;
  return t;
}

// rectangular room interior: six one-sided quads
void add_room(SceneSpec& s, Vec3 lo, Vec3 hi) {
  double dx = hi.x - lo.x, dy = hi.y - lo.y, dz = hi.z - lo.z;
  // back (+y), front (-y)
  s.walls.push_back({{lo.x, hi.y, lo.z}, {dx, 0, 0}, {0, 0, dz},
                     checker({0.93, 0.93, 0.88}, {0.12, 0.16, 0.46}, 6)});
  s.walls.push_back({{lo.x, lo.y, lo.z}, {dx, 0, 0}, {0, 0, dz},
                     solid({0.12, 0.12, 0.14})});
  // left (-x), right (+x)
  s.walls.push_back({{lo.x, lo.y, lo.z}, {0, dy, 0}, {0, 0, dz},
                     checker({0.85, 0.92, 0.80}, {0.18, 0.40, 0.22}, 8)});
  s.walls.push_back({{hi.x, lo.y, lo.z}, {0, dy, 0}, {0, 0, dz},
                     gradient({0.75, 0.45, 0.30}, {0.30, 0.12, 0.10})});
  // floor, ceiling
  s.walls.push_back({{lo.x, lo.y, lo.z}, {dx, 0, 0}, {0, dy, 0},
                     checker({0.70, 0.70, 0.70}, {0.35, 0.35, 0.38}, 10)});
  s.walls.push_back({{lo.x, lo.y, hi.z}, {dx, 0, 0}, {0, dy, 0},
                     solid({0.82, 0.82, 0.84})});
  s.aabb_min = lo;
  s.aabb_max = hi;
}

SceneSpec slab_checker_scene(bool with_slab) {
  SceneSpec s;
  s.name = with_slab ? "slab-checker" : "no-glass";
  add_room(s, {-45, -70, 0}, {45, 30, 75});
  if (with_slab) {
    Slab slab;
    slab.point = {0, 10, 25};
    slab.normal = {0, -1, 0};
    slab.thickness = 5.0;
    slab.ior = 1.45;
    slab.half_u = 20;  // spans x in [-20,20]
    slab.half_v = 20;  // spans z in [5,45]
    s.slabs.push_back(slab);
  }
  Sphere ball;
  ball.center = {8, 22, 12};
  ball.radius = 7;
  ball.tex = solid({0.85, 0.45, 0.15});
  s.spheres.push_back(ball);
  s.light.center = {0, -25, 40};
  s.light.radius = 6;
  s.light.intensity = 5.0;
  s.reflection_scale = 3.0;
  return s;
}

SceneSpec showcase_scene() {
  SceneSpec s;
  s.name = "showcase";
  add_room(s, {-120, -120, 0}, {120, 120, 160});
  // five-sided glass case, 50x50x50, 1 cm panes
  auto pane = [](Vec3 pt, Vec3 n, double hu, double hv) {
    Slab sl;
    sl.point = pt;
    sl.normal = n;
    sl.thickness = 1.0;
    sl.ior = 1.45;
    sl.half_u = hu;
    sl.half_v = hv;
    return sl;
  };
  s.slabs.push_back(pane({0, -25, 30}, {0, -1, 0}, 25, 25));
  s.slabs.push_back(pane({0, 25, 30}, {0, 1, 0}, 25, 25));
  s.slabs.push_back(pane({-25, 0, 30}, {-1, 0, 0}, 25, 25));
  s.slabs.push_back(pane({25, 0, 30}, {1, 0, 0}, 25, 25));
  s.slabs.push_back(pane({0, 0, 55}, {0, 0, 1}, 25, 25));
  Box b1;
  b1.min = {-16, -14, 5};
  b1.max = {-2, 0, 26};
  b1.tex = checker({0.80, 0.20, 0.15}, {0.95, 0.85, 0.30}, 4);
  s.boxes.push_back(b1);
  Box b2;
  b2.min = {4, -4, 5};
  b2.max = {18, 10, 16};
  b2.tex = solid({0.20, 0.55, 0.25});
  s.boxes.push_back(b2);
  Sphere sp;
  sp.center = {2, 8, 34};
  sp.radius = 8;
  sp.tex = gradient({0.25, 0.35, 0.85}, {0.80, 0.85, 0.95});
  s.spheres.push_back(sp);
  s.light.center = {0, 0, 140};
  s.light.radius = 15;
  s.light.intensity = 5.0;
  s.reflection_scale = 3.0;
  return s;
}

}  // namespace

SceneSpec scene_preset(const std::string& name) {
  if (name == "slab-checker") return slab_checker_scene(true);
  if (name == "no-glass") return slab_checker_scene(false);
  if (name == "showcase") return showcase_scene();
  throw std::invalid_argument("unknown scene preset '" + name +
                              "' (have: slab-checker, no-glass, showcase)");
}

// ---------------------------------------------------------------------------
// JSON scene description

namespace {

json tex_to_json(const Texture& t) {
  const char* kinds[] = {"solid", "checker", "gradient"};
  return {{"kind", kinds[(int)t.kind]},
          {"color_a", {t.color_a.x, t.color_a.y, t.color_a.z}},
          {"color_b", {t.color_b.x, t.color_b.y, t.color_b.z}},
          {"cell", t.cell}};
}

Texture tex_from_json(const json& j) {
  Texture t;
  std::string k = j.value("kind", "solid");
  if (k == "checker") t.kind = Texture::Kind::Checker;
  else if (k == "gradient") t.kind = Texture::Kind::Gradient;
  else if (k == "solid") t.kind = Texture::Kind::Solid;
  else throw std::invalid_argument("scene: unknown texture kind " + k);
  auto va = j.value("color_a", std::vector<double>{0.8, 0.8, 0.8});
  auto vb = j.value("color_b", std::vector<double>{0.2, 0.2, 0.2});
  t.color_a = {va.at(0), va.at(1), va.at(2)};
  t.color_b = {vb.at(0), vb.at(1), vb.at(2)};
  t.cell = j.value("cell", 10.0);
  return t;
}

Vec3 v3(const json& j) { return {j.at(0), j.at(1), j.at(2)}; }
json j3(const Vec3& v) { return {v.x, v.y, v.z}; }

}  // namespace

std::string scene_to_json(const SceneSpec& s) {
  json j;
  j["name"] = s.name;
  j["reflection_scale"] = s.reflection_scale;
  j["ambient"] = s.ambient;
  j["diffuse"] = s.diffuse;
  j["background"] = j3(s.background);
  j["max_glass_traversals"] = s.max_glass_traversals;
  j["aabb"] = {{"min", j3(s.aabb_min)}, {"max", j3(s.aabb_max)}};
  j["light"] = {{"center", j3(s.light.center)},
                {"radius", s.light.radius},
                {"intensity", s.light.intensity}};
  j["slabs"] = json::array();
  for (auto& sl : s.slabs)
    j["slabs"].push_back({{"point", j3(sl.point)},
                          {"normal", j3(sl.normal)},
                          {"thickness", sl.thickness},
                          {"ior", sl.ior},
                          {"half_u", sl.half_u},
                          {"half_v", sl.half_v}});
  j["walls"] = json::array();
  for (auto& q : s.walls)
    j["walls"].push_back({{"origin", j3(q.origin)},
                          {"u_axis", j3(q.u_axis)},
                          {"v_axis", j3(q.v_axis)},
                          {"texture", tex_to_json(q.tex)}});
  j["spheres"] = json::array();
  for (auto& sp : s.spheres)
    j["spheres"].push_back({{"center", j3(sp.center)},
                            {"radius", sp.radius},
                            {"texture", tex_to_json(sp.tex)}});
  j["boxes"] = json::array();
  for (auto& b : s.boxes)
    j["boxes"].push_back({{"min", j3(b.min)},
                          {"max", j3(b.max)},
                          {"texture", tex_to_json(b.tex)}});
  return j.dump(1);
}

SceneSpec scene_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("scene: malformed JSON: ") + e.what());
  }
  SceneSpec s;
  s.name = j.value("name", "scene");
  s.reflection_scale = j.value("reflection_scale", 1.0);
  s.ambient = j.value("ambient", 0.4);
  s.diffuse = j.value("diffuse", 0.6);
  if (j.contains("background")) s.background = v3(j["background"]);
  s.max_glass_traversals = j.value("max_glass_traversals", 8);
  if (j.contains("aabb")) {
    s.aabb_min = v3(j["aabb"]["min"]);
    s.aabb_max = v3(j["aabb"]["max"]);
  }
  if (j.contains("light")) {
    s.light.center = v3(j["light"]["center"]);
    s.light.radius = j["light"].value("radius", 5.0);
    s.light.intensity = j["light"].value("intensity", 5.0);
  }
  for (auto& sj : j.value("slabs", json::array())) {
    Slab sl;
    sl.point = v3(sj.at("point"));
    sl.normal = v3(sj.at("normal")).normalized();
    sl.thickness = sj.at("thickness");
    sl.ior = sj.at("ior");
    sl.half_u = sj.value("half_u", 1e9);
    sl.half_v = sj.value("half_v", 1e9);
    s.slabs.push_back(sl);
  }
  for (auto& qj : j.value("walls", json::array()))
    s.walls.push_back({v3(qj.at("origin")), v3(qj.at("u_axis")),
                       v3(qj.at("v_axis")), tex_from_json(qj.value("texture", json::object()))});
  for (auto& sj : j.value("spheres", json::array()))
    s.spheres.push_back({v3(sj.at("center")), sj.at("radius"),
                         tex_from_json(sj.value("texture", json::object()))});
  for (auto& bj : j.value("boxes", json::array()))
    s.boxes.push_back({v3(bj.at("min")), v3(bj.at("max")),
                       tex_from_json(bj.value("texture", json::object()))});
  s.validate();
  return s;
}

// ---------------------------------------------------------------------------
// dataset generation

std::string generate_dataset(const SceneSpec& scene, const GenerateConfig& cfg,
                             const std::string& out_dir) {
  if (cfg.train_count < 1 || cfg.val_count < 1 || cfg.test_count < 1)
    throw std::invalid_argument("generate_dataset: all split counts must be >= 1");
  scene.validate();

  std::error_code ec;
  fs::create_directories(fs::path(out_dir) / "train", ec);
  fs::create_directories(fs::path(out_dir) / "val", ec);
  fs::create_directories(fs::path(out_dir) / "test", ec);
  fs::create_directories(fs::path(out_dir) / "gt" / "depth", ec);
  fs::create_directories(fs::path(out_dir) / "gt" / "reflection", ec);
  if (ec) throw std::runtime_error("generate_dataset: cannot create " + out_dir);

  Vec3 diag = scene.aabb_max - scene.aabb_min;
  double half_diag = 0.5 * diag.norm();
  double near = cfg.near > 0 ? cfg.near : std::max(1.0, cfg.trajectory.radius - half_diag);
  double far = cfg.far > 0 ? cfg.far : cfg.trajectory.radius + half_diag;

  Rng rng(cfg.seed);
  DatasetManifest manifest;
  manifest.camera_angle_x = cfg.camera_angle_x;
  manifest.width = cfg.width;
  manifest.height = cfg.height;
  manifest.near = near;
  manifest.far = far;

  const double depth_scale = far;
  const Trajectory& traj = cfg.trajectory;

  auto emit_split = [&](const std::string& split, int count) {
    for (int i = 0; i < count; ++i) {
      // even azimuth coverage with seeded jitter; elevation fully jittered
      double fa = count > 1 ? (i + 0.6 * rng.uniform()) / count : rng.uniform();
      double az = traj.azimuth_min_deg +
                  fa * (traj.azimuth_max_deg - traj.azimuth_min_deg);
      double el = traj.elevation_min_deg +
                  rng.uniform() * (traj.elevation_max_deg - traj.elevation_min_deg);
      Camera cam = make_orbit_camera(traj, az, el, cfg.width, cfg.height,
                                     cfg.camera_angle_x, near, far);
      auto view = render_view(scene, cam);

      char name[64];
      std::snprintf(name, sizeof(name), "r_%03d.png", i);
      std::string rel = split + "/" + name;
      write_png_rgb((fs::path(out_dir) / rel).string(), view.color);

      if (split == "test") {
        std::vector<uint16_t> d16(view.depth.size());
        for (size_t k = 0; k < view.depth.size(); ++k) {
          double v = view.depth[k] < 0 ? 0.0
                                       : std::clamp(view.depth[k] / depth_scale, 0.0, 1.0);
          d16[k] = (uint16_t)std::lround(v * 65535.0);
        }
        write_png_gray16((fs::path(out_dir) / "gt" / "depth" / name).string(),
                         d16, cfg.width, cfg.height);
        write_png_rgb((fs::path(out_dir) / "gt" / "reflection" / name).string(),
                      view.reflection);
      }

      Frame f;
      f.file_path = rel;
      f.transform = cam.c2w;
      f.split = split;
      manifest.frames.push_back(f);
    }
  };

  emit_split("train", cfg.train_count);
  emit_split("val", cfg.val_count);
  emit_split("test", cfg.test_count);

  auto points = glass_surface_points(scene, 48);
  save_xyz(points, (fs::path(out_dir) / "gt" / "glass_points.xyz").string());

  GtMeta meta;
  meta.depth_scale_cm = depth_scale;
  meta.scene_extent_cm = scene.scene_extent();
  meta.slabs = scene.slabs;
  save_gt_meta(meta, (fs::path(out_dir) / "gt" / "meta.json").string());

  {
    std::ofstream sj((fs::path(out_dir) / "scene.json").string());
    sj << scene_to_json(scene) << "\n";
  }

  GroundTruthInfo gt;
  gt.glass_points = "gt/glass_points.xyz";
  gt.depth_dir = "gt/depth";
  gt.reflection_dir = "gt/reflection";
  gt.meta = "gt/meta.json";
  manifest.ground_truth = gt;

  std::string manifest_path = (fs::path(out_dir) / "transforms.json").string();
  save_manifest(manifest, manifest_path);
  return manifest_path;
}

}  // namespace gf::oracle
