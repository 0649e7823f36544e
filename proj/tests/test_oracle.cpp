#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "glassfield/dataset.hpp"
#include "glassfield/oracle.hpp"

using gf::Vec3;
namespace oracle = gf::oracle;
namespace fs = std::filesystem;

static double deg(double d) { return d * M_PI / 180.0; }

// closed-form lateral displacement of a ray crossing a parallel-faced pane
static double slab_shift(double theta_i, double ior, double thickness) {
  double theta_t = std::asin(std::sin(theta_i) / ior);
  return thickness * std::sin(theta_i - theta_t) / std::cos(theta_t);
}

TEST_CASE("snell refraction") {
  Vec3 n{0, 0, 1};

  SUBCASE("normal incidence passes straight through") {
    Vec3 d{0, 0, -1};
    auto r = oracle::snell_refract(d, n, 1.0 / 1.45);
    CHECK_FALSE(r.total_internal_reflection);
    CHECK(r.direction.x == doctest::Approx(0.0));
    CHECK(r.direction.z == doctest::Approx(-1.0));
  }

  SUBCASE("air to glass at 45 degrees") {
    double ti = deg(45);
    Vec3 d{std::sin(ti), 0, -std::cos(ti)};
    auto r = oracle::snell_refract(d, n, 1.0 / 1.45);
    REQUIRE_FALSE(r.total_internal_reflection);
    double cos_t = -r.direction.dot(-n * -1.0);  // angle against -n
    double angle = std::acos(std::clamp(r.direction.dot(Vec3{0, 0, -1}), -1.0, 1.0));
    CHECK(angle == doctest::Approx(std::asin(std::sin(ti) / 1.45)).epsilon(1e-12));
    CHECK(angle == doctest::Approx(deg(29.1845)).epsilon(1e-4));
    (void)cos_t;
  }

  SUBCASE("glass to air beyond the critical angle reflects internally") {
    double crit = std::asin(1.0 / 1.45);
    CHECK(crit == doctest::Approx(deg(43.603)).epsilon(1e-4));
    double ti = deg(60);
    Vec3 d{std::sin(ti), 0, -std::cos(ti)};
    auto r = oracle::snell_refract(d, n, 1.45);
    CHECK(r.total_internal_reflection);
  }
}

TEST_CASE("schlick reflectance stays in [0,1]") {
  for (double c = 0; c <= 1.0; c += 0.01) {
    double r = oracle::schlick_reflectance(c, 1.45);
    CHECK(r >= 0.0);
    CHECK(r <= 1.0);
  }
  CHECK(oracle::schlick_reflectance(1.0, 1.45) ==
        doctest::Approx(std::pow(0.45 / 2.45, 2)).epsilon(1e-12));
}

static oracle::Slab unit_slab(double thickness = 1.0, double ior = 1.45) {
  oracle::Slab s;
  s.point = {0, 0, 0};
  s.normal = {0, 0, 1};
  s.thickness = thickness;
  s.ior = ior;
  return s;
}

static gf::Ray slanted_ray(double theta_i) {
  Vec3 d{std::sin(theta_i), 0, -std::cos(theta_i)};
  return {Vec3{0, 0, 5} - d * 5.0, d, 0.1, 100};
}

TEST_CASE("slab traversal: hand cases") {
  SUBCASE("45 degrees, n=1.45, 1 cm gives 0.312 cm shift") {
    auto tr = oracle::trace_through_slab(slanted_ray(deg(45)), unit_slab());
    REQUIRE(tr.intersected);
    REQUIRE_FALSE(tr.tir);
    Vec3 disp = tr.exit.origin - tr.entry_point;
    Vec3 lateral = disp - tr.exit.direction * disp.dot(tr.exit.direction);
    CHECK(lateral.norm() == doctest::Approx(0.31216).epsilon(1e-4));
    CHECK(lateral.norm() ==
          doctest::Approx(slab_shift(deg(45), 1.45, 1.0)).epsilon(1e-12));
  }
  SUBCASE("normal incidence has zero shift") {
    auto tr = oracle::trace_through_slab(slanted_ray(0.0), unit_slab());
    REQUIRE(tr.intersected);
    Vec3 disp = tr.exit.origin - tr.entry_point;
    Vec3 lateral = disp - tr.exit.direction * disp.dot(tr.exit.direction);
    CHECK(lateral.norm() == doctest::Approx(0.0).epsilon(1e-12));
  }
  SUBCASE("shift is linear in thickness") {
    auto t1 = oracle::trace_through_slab(slanted_ray(deg(45)), unit_slab(1.0));
    auto t2 = oracle::trace_through_slab(slanted_ray(deg(45)), unit_slab(2.0));
    auto lat = [](const oracle::SlabTraversal& tr) {
      Vec3 disp = tr.exit.origin - tr.entry_point;
      return (disp - tr.exit.direction * disp.dot(tr.exit.direction)).norm();
    };
    CHECK(lat(t2) == doctest::Approx(2.0 * lat(t1)).epsilon(1e-12));
  }
  SUBCASE("miss passes through unchanged") {
    oracle::Slab s = unit_slab();
    s.half_u = s.half_v = 1.0;
    gf::Ray ray{{50, 50, 5}, {0, 0, -1}, 0.1, 100};
    auto tr = oracle::trace_through_slab(ray, s);
    CHECK_FALSE(tr.intersected);
    CHECK(tr.exit.origin.x == 50);
    CHECK(tr.exit.direction.z == -1);
  }
}

TEST_CASE("slab traversal: 1000 random angles match the closed form") {
  gf::Rng rng(77);
  auto slab = unit_slab(1.0, 1.45);
  for (int i = 0; i < 1000; ++i) {
    double ti = rng.uniform(0.0, deg(84));  // below grazing
    auto tr = oracle::trace_through_slab(slanted_ray(ti), slab);
    REQUIRE(tr.intersected);
    REQUIRE_FALSE(tr.tir);
    // exit parallel to entry
    Vec3 d_in{std::sin(ti), 0, -std::cos(ti)};
    CHECK(tr.exit.direction.dot(d_in) >= 1.0 - 1e-9);
    // lateral displacement against the formula
    Vec3 disp = tr.exit.origin - tr.entry_point;
    Vec3 lateral = disp - d_in * disp.dot(d_in);
    CHECK(std::abs(lateral.norm() - slab_shift(ti, 1.45, 1.0)) < 1e-9);
  }
}

static oracle::SceneSpec tiny_scene(bool with_slab, double reflection_scale) {
  oracle::SceneSpec s;
  // single checker wall behind a pane, light off to the side
  oracle::Texture tex;
  tex.kind = oracle::Texture::Kind::Checker;
  tex.color_a = {1, 1, 1};
  tex.color_b = {0, 0, 0};
  tex.cell = 2.0;
  s.walls.push_back({{-50, 20, -50}, {100, 0, 0}, {0, 0, 100}, tex});
  if (with_slab) {
    oracle::Slab slab;
    slab.point = {0, 5, 0};
    slab.normal = {0, -1, 0};
    slab.thickness = 1.0;
    slab.ior = 1.45;
    s.slabs.push_back(slab);
  }
  s.light.center = {0, -40, 200};
  s.light.radius = 1;
  s.light.intensity = 5;
  s.reflection_scale = reflection_scale;
  s.aabb_min = {-50, -50, -50};
  s.aabb_max = {50, 20, 50};
  return s;
}

TEST_CASE("trace_scene: zero reflectivity equals hand-traced refraction path") {
  auto scene = tiny_scene(true, 0.0);
  double ti = deg(40);
  gf::Ray ray{{0, -20, 0}, {std::sin(ti), std::cos(ti), 0}, 0.1, 200};
  auto res = oracle::trace_scene(ray, scene);
  CHECK(res.reflection.norm() == 0.0);

  // independent path: slab traversal then wall shading by hand
  auto tr = oracle::trace_through_slab(ray, scene.slabs[0]);
  REQUIRE(tr.intersected);
  double t_wall = (20.0 - tr.exit.origin.y) / tr.exit.direction.y;
  Vec3 p = tr.exit.origin + tr.exit.direction * t_wall;
  Vec3 albedo = scene.walls[0].tex.sample(p.x + 50.0, p.z + 50.0);
  Vec3 to_light = (scene.light.center - p).normalized();
  double lambert = std::max(0.0, Vec3{0, -1, 0}.dot(to_light));
  Vec3 expect = albedo * (scene.ambient + scene.diffuse * lambert);
  CHECK(res.color.x == doctest::Approx(expect.x).epsilon(1e-12));
  CHECK(res.color.y == doctest::Approx(expect.y).epsilon(1e-12));
  CHECK(res.color.z == doctest::Approx(expect.z).epsilon(1e-12));
  // depth equals the accumulated refracted path length (up to the 1e-6 cm
  // self-intersection nudges)
  CHECK(res.depth == doctest::Approx(tr.entry_t + tr.inside_length + t_wall)
                         .epsilon(1e-7));
}

TEST_CASE("trace_scene: wall hit displaced by the slab's lateral shift") {
  auto with_slab = tiny_scene(true, 0.0);
  auto without = tiny_scene(false, 0.0);
  double ti = deg(45);
  gf::Ray ray{{0.21, -20, 0.13}, {std::sin(ti), std::cos(ti), 0}, 0.1, 200};

  auto tr = oracle::trace_through_slab(ray, with_slab.slabs[0]);
  REQUIRE(tr.intersected);
  // exit ray parallel to the original: the wall-hit displacement, projected
  // perpendicular to the ray, is exactly the slab's lateral shift
  double t_wall_straight = (20.0 - ray.origin.y) / ray.direction.y;
  Vec3 p_straight = ray.origin + ray.direction * t_wall_straight;
  double t_wall_shift = (20.0 - tr.exit.origin.y) / tr.exit.direction.y;
  Vec3 p_shifted = tr.exit.origin + tr.exit.direction * t_wall_shift;
  Vec3 diff = p_shifted - p_straight;
  Vec3 perp = diff - ray.direction * diff.dot(ray.direction);
  CHECK(perp.norm() == doctest::Approx(slab_shift(ti, 1.45, 1.0)).epsilon(1e-9));

  // thickness -> 0 degenerates to the straight render
  auto thin = tiny_scene(true, 0.0);
  thin.slabs[0].thickness = 1e-9;
  auto a = oracle::trace_scene(ray, thin);
  auto b = oracle::trace_scene(ray, without);
  CHECK(a.color.x == doctest::Approx(b.color.x).epsilon(1e-6));
  CHECK(a.color.y == doctest::Approx(b.color.y).epsilon(1e-6));
  CHECK(a.color.z == doctest::Approx(b.color.z).epsilon(1e-6));
}

TEST_CASE("trace_scene: depth matches the analytic wall distance") {
  auto scene = tiny_scene(false, 0.0);
  gf::Ray ray{{3, -20, 7}, {0, 1, 0}, 0.1, 200};
  auto res = oracle::trace_scene(ray, scene);
  CHECK(res.depth == doctest::Approx(40.0).epsilon(1e-12));

  // with the pane: entry + inside + remainder, normal incidence
  auto scene2 = tiny_scene(true, 0.0);
  auto res2 = oracle::trace_scene(ray, scene2);
  CHECK(res2.depth == doctest::Approx(40.0).epsilon(1e-4));
}

TEST_CASE("scene presets validate and carry glass ground truth") {
  auto s = oracle::scene_preset("slab-checker");
  s.validate();
  CHECK(s.slabs.size() == 1);
  CHECK(s.slabs[0].ior == doctest::Approx(1.45));
  auto pts = oracle::glass_surface_points(s, 8);
  CHECK(pts.size() == 2 * 8 * 8);
  // every point lies exactly on one of the two face planes
  for (auto& p : pts) {
    double d_front = std::abs((p - s.slabs[0].point).dot(s.slabs[0].normal));
    Vec3 back = s.slabs[0].point - s.slabs[0].normal * s.slabs[0].thickness;
    double d_back = std::abs((p - back).dot(s.slabs[0].normal));
    CHECK(std::min(d_front, d_back) == doctest::Approx(0.0).epsilon(1e-12));
  }
  auto ng = oracle::scene_preset("no-glass");
  CHECK(ng.slabs.empty());
  auto sc = oracle::scene_preset("showcase");
  CHECK(sc.slabs.size() == 5);
  CHECK(sc.slabs[0].thickness == doctest::Approx(1.0));
  CHECK_THROWS_AS(oracle::scene_preset("nope"), std::invalid_argument);
}

TEST_CASE("scene json round trip") {
  auto s = oracle::scene_preset("slab-checker");
  auto text = oracle::scene_to_json(s);
  auto s2 = oracle::scene_from_json(text);
  CHECK(s2.slabs.size() == s.slabs.size());
  CHECK(s2.walls.size() == s.walls.size());
  CHECK(s2.slabs[0].thickness == s.slabs[0].thickness);
  CHECK(s2.reflection_scale == s.reflection_scale);
  CHECK_THROWS_AS(oracle::scene_from_json("{nope"), std::invalid_argument);
}

TEST_CASE("dataset generation is deterministic and complete") {
  auto scene = oracle::scene_preset("slab-checker");
  oracle::GenerateConfig cfg;
  cfg.train_count = 3;
  cfg.val_count = 1;
  cfg.test_count = 2;
  cfg.width = cfg.height = 16;
  cfg.seed = 7;
  cfg.camera_angle_x = 0.8552;
  cfg.trajectory.target = {0, 8, 25};
  cfg.trajectory.radius = 60;
  cfg.trajectory.azimuth_min_deg = -45;
  cfg.trajectory.azimuth_max_deg = 45;
  cfg.trajectory.elevation_min_deg = 4;
  cfg.trajectory.elevation_max_deg = 32;

  auto read_all = [](const std::string& p) {
    std::ifstream f(p, std::ios::binary);
    return std::string((std::istreambuf_iterator<char>(f)),
                       std::istreambuf_iterator<char>());
  };

  std::string dir1 = (fs::temp_directory_path() / "gfds1").string();
  std::string dir2 = (fs::temp_directory_path() / "gfds2").string();
  fs::remove_all(dir1);
  fs::remove_all(dir2);
  auto m1 = oracle::generate_dataset(scene, cfg, dir1);
  auto m2 = oracle::generate_dataset(scene, cfg, dir2);

  auto manifest = gf::load_manifest(m1);  // validates transforms + files
  CHECK(manifest.frames.size() == 6);
  CHECK(manifest.split("train").size() == 3);
  CHECK(manifest.split("test").size() == 2);
  REQUIRE(manifest.ground_truth.has_value());
  auto pts = gf::load_xyz(dir1 + "/" + manifest.ground_truth->glass_points);
  CHECK(pts.size() > 0);

  for (std::string rel :
       {std::string("transforms.json"), std::string("train/r_000.png"),
        std::string("test/r_001.png"), std::string("gt/glass_points.xyz"),
        std::string("gt/depth/r_000.png"), std::string("gt/reflection/r_000.png")}) {
    CHECK_MESSAGE(read_all(dir1 + "/" + rel) == read_all(dir2 + "/" + rel), rel);
  }

  // depth ground truth round-trips through its 16-bit encoding
  auto meta = gf::load_gt_meta(dir1 + "/" + manifest.ground_truth->meta);
  CHECK(meta.depth_scale_cm > 0);
  CHECK(meta.slabs.size() == 1);
  int dw, dh;
  auto d16 = gf::read_png_gray16(dir1 + "/gt/depth/r_000.png", dw, dh);
  CHECK(dw == 16);
  double max_depth = 0;
  for (auto v : d16) max_depth = std::max(max_depth, v / 65535.0 * meta.depth_scale_cm);
  CHECK(max_depth > 10.0);  // scene content sits tens of cm away
  CHECK(max_depth <= meta.depth_scale_cm);

  fs::remove_all(dir1);
  fs::remove_all(dir2);
}

TEST_CASE("manifest validation rejects corrupt entries") {
  auto scene = oracle::scene_preset("no-glass");
  oracle::GenerateConfig cfg;
  cfg.train_count = cfg.val_count = cfg.test_count = 1;
  cfg.width = cfg.height = 8;
  cfg.seed = 1;
  cfg.trajectory.target = {0, 8, 25};
  cfg.trajectory.radius = 60;
  std::string dir = (fs::temp_directory_path() / "gfds3").string();
  fs::remove_all(dir);
  auto mpath = oracle::generate_dataset(scene, cfg, dir);

  auto m = gf::load_manifest(mpath);
  SUBCASE("non-rigid transform") {
    auto bad = m;
    bad.frames[0].transform[0] = 2.0;  // scaled rotation row
    CHECK_THROWS_WITH_AS(gf::validate_manifest(bad),
                         doctest::Contains("non-rigid"), std::runtime_error);
  }
  SUBCASE("missing file") {
    auto bad = m;
    bad.frames[0].file_path = "train/missing.png";
    CHECK_THROWS_WITH_AS(gf::validate_manifest(bad),
                         doctest::Contains("missing image"), std::runtime_error);
  }
  SUBCASE("unknown split") {
    auto bad = m;
    bad.frames[0].split = "training";
    CHECK_THROWS_WITH_AS(gf::validate_manifest(bad),
                         doctest::Contains("unknown split"), std::runtime_error);
  }
  fs::remove_all(dir);
}
