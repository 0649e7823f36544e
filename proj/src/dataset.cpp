#include "glassfield/dataset.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <json.hpp>

namespace fs = std::filesystem;
using nlohmann::json;

namespace gf {

namespace {

json vec3_to_json(const Vec3& v) { return json::array({v.x, v.y, v.z}); }
Vec3 vec3_from_json(const json& j) { return {j.at(0), j.at(1), j.at(2)}; }

json matrix_to_json(const std::array<double, 16>& m) {
  json rows = json::array();
  for (int r = 0; r < 4; ++r) {
    json row = json::array();
    for (int c = 0; c < 4; ++c) row.push_back(m[4 * r + c]);
    rows.push_back(row);
  }
  return rows;
}

std::array<double, 16> matrix_from_json(const json& j) {
  std::array<double, 16> m{};
  if (j.size() != 4) throw std::runtime_error("manifest: transform is not 4x4");
  for (int r = 0; r < 4; ++r) {
    if (j[r].size() != 4) throw std::runtime_error("manifest: transform is not 4x4");
    for (int c = 0; c < 4; ++c) m[4 * r + c] = j[r][c];
  }
  return m;
}

}  // namespace

std::vector<const Frame*> DatasetManifest::split(const std::string& name) const {
  std::vector<const Frame*> out;
  for (auto& f : frames)
    if (f.split == name) out.push_back(&f);
  return out;
}

Camera DatasetManifest::camera_for(const Frame& f) const {
  Camera cam;
  cam.width = width;
  cam.height = height;
  cam.camera_angle_x = camera_angle_x;
  cam.c2w = f.transform;
  cam.near = near;
  cam.far = far;
  return cam;
}

void save_manifest(const DatasetManifest& m, const std::string& path) {
  json j;
  j["camera_angle_x"] = m.camera_angle_x;
  j["resolution"] = {m.width, m.height};
  j["units"] = m.units;
  j["near"] = m.near;
  j["far"] = m.far;
  json frames = json::array();
  for (auto& f : m.frames) {
    frames.push_back({{"file_path", f.file_path},
                      {"transform_matrix", matrix_to_json(f.transform)},
                      {"split", f.split}});
  }
  j["frames"] = frames;
  if (m.ground_truth) {
    j["ground_truth"] = {{"glass_points", m.ground_truth->glass_points},
                         {"depth_dir", m.ground_truth->depth_dir},
                         {"reflection_dir", m.ground_truth->reflection_dir},
                         {"meta", m.ground_truth->meta}};
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error("manifest: cannot write " + path);
  out << j.dump(1) << "\n";
}

DatasetManifest load_manifest(const std::string& path, bool validate) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("manifest: cannot open " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw std::runtime_error("manifest: malformed JSON in " + path + ": " + e.what());
  }
  DatasetManifest m;
  m.camera_angle_x = j.at("camera_angle_x");
  m.width = j.at("resolution").at(0);
  m.height = j.at("resolution").at(1);
  m.units = j.value("units", "cm");
  m.near = j.value("near", 0.0);
  m.far = j.value("far", 0.0);
  for (auto& fj : j.at("frames")) {
    Frame f;
    f.file_path = fj.at("file_path");
    f.transform = matrix_from_json(fj.at("transform_matrix"));
    f.split = fj.value("split", "train");
    m.frames.push_back(std::move(f));
  }
  if (j.contains("ground_truth")) {
    GroundTruthInfo gt;
    auto& g = j["ground_truth"];
    gt.glass_points = g.value("glass_points", "");
    gt.depth_dir = g.value("depth_dir", "");
    gt.reflection_dir = g.value("reflection_dir", "");
    gt.meta = g.value("meta", "");
    m.ground_truth = gt;
  }
  m.dir = fs::path(path).parent_path().string();
  if (m.dir.empty()) m.dir = ".";
  if (validate) validate_manifest(m);
  return m;
}

void validate_manifest(const DatasetManifest& m) {
  if (!(m.camera_angle_x > 0) || m.camera_angle_x >= M_PI)
    throw std::runtime_error("manifest: camera_angle_x out of range");
  if (m.width <= 0 || m.height <= 0)
    throw std::runtime_error("manifest: invalid resolution");
  for (auto& f : m.frames) {
    if (f.split != "train" && f.split != "val" && f.split != "test")
      throw std::runtime_error("manifest: unknown split '" + f.split + "' for " +
                               f.file_path);
    // rotation must be orthonormal with determinant +1
    const auto& t = f.transform;
    double dot[3][3];
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) {
        dot[a][b] = 0;
        for (int k = 0; k < 3; ++k) dot[a][b] += t[4 * k + a] * t[4 * k + b];
      }
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b)
        if (std::abs(dot[a][b] - (a == b ? 1.0 : 0.0)) > 1e-6)
          throw std::runtime_error("manifest: non-rigid transform for " +
                                   f.file_path);
    double det =
        t[0] * (t[5] * t[10] - t[6] * t[9]) - t[1] * (t[4] * t[10] - t[6] * t[8]) +
        t[2] * (t[4] * t[9] - t[5] * t[8]);
    if (std::abs(det - 1.0) > 1e-6)
      throw std::runtime_error("manifest: transform determinant != +1 for " +
                               f.file_path);
    if (t[12] != 0 || t[13] != 0 || t[14] != 0 || t[15] != 1)
      throw std::runtime_error("manifest: transform last row must be 0 0 0 1 for " +
                               f.file_path);

    fs::path img = fs::path(m.dir) / f.file_path;
    if (!fs::exists(img))
      throw std::runtime_error("manifest: missing image file " + img.string());
  }
}

void save_gt_meta(const GtMeta& meta, const std::string& path) {
  json j;
  j["depth_scale_cm"] = meta.depth_scale_cm;
  j["scene_extent_cm"] = meta.scene_extent_cm;
  json slabs = json::array();
  for (auto& s : meta.slabs) {
    slabs.push_back({{"point", vec3_to_json(s.point)},
                     {"normal", vec3_to_json(s.normal)},
                     {"thickness", s.thickness},
                     {"ior", s.ior},
                     {"half_u", s.half_u},
                     {"half_v", s.half_v}});
  }
  j["slabs"] = slabs;
  std::ofstream out(path);
  if (!out) throw std::runtime_error("gt meta: cannot write " + path);
  out << j.dump(1) << "\n";
}

GtMeta load_gt_meta(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("gt meta: cannot open " + path);
  json j = json::parse(in);
  GtMeta meta;
  meta.depth_scale_cm = j.at("depth_scale_cm");
  meta.scene_extent_cm = j.at("scene_extent_cm");
  for (auto& sj : j.at("slabs")) {
    oracle::Slab s;
    s.point = vec3_from_json(sj.at("point"));
    s.normal = vec3_from_json(sj.at("normal"));
    s.thickness = sj.at("thickness");
    s.ior = sj.value("ior", 1.45);
    s.half_u = sj.at("half_u");
    s.half_v = sj.at("half_v");
    meta.slabs.push_back(s);
  }
  return meta;
}

void save_xyz(const std::vector<Vec3>& points, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("xyz: cannot write " + path);
  out.precision(9);
  for (auto& p : points) out << p.x << " " << p.y << " " << p.z << "\n";
}

std::vector<Vec3> load_xyz(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("xyz: cannot open " + path);
  std::vector<Vec3> pts;
  Vec3 p;
  while (in >> p.x >> p.y >> p.z) pts.push_back(p);
  return pts;
}

std::vector<LoadedView> load_views(const DatasetManifest& m,
                                   const std::string& split) {
  std::vector<LoadedView> out;
  for (auto& f : m.frames) {
    if (!split.empty() && f.split != split) continue;
    LoadedView v;
    v.cam = m.camera_for(f);
    v.image = read_png_rgb((fs::path(m.dir) / f.file_path).string());
    if (v.image.width != m.width || v.image.height != m.height)
      throw std::runtime_error("dataset: image " + f.file_path +
                               " does not match declared resolution");
    v.file_path = f.file_path;
    out.push_back(std::move(v));
  }
  return out;
}

}  // namespace gf
