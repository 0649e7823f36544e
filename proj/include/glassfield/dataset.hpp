#pragma once

// On-disk dataset format shared by the oracle generator and the trainer:
// a transforms.json manifest (horizontal fov + per-frame camera-to-world
// matrices with split tags) next to the image files, plus optional ground
// truth (glass surface points, depth maps, reflection-only images).

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "glassfield/camera.hpp"
#include "glassfield/image.hpp"
#include "glassfield/oracle.hpp"

namespace gf {

struct Frame {
  std::string file_path;              // relative to the manifest directory
  std::array<double, 16> transform{}; // row-major camera-to-world
  std::string split;                  // "train" | "val" | "test"
};

struct GroundTruthInfo {
  std::string glass_points;   // XYZ text file
  std::string depth_dir;      // 16-bit grayscale PNGs per test frame
  std::string reflection_dir; // reflection-only PNGs per test frame
  std::string meta;           // JSON: depth scale, scene extent, slab planes
};

struct DatasetManifest {
  double camera_angle_x = 0;
  int width = 0, height = 0;
  std::string units = "cm";
  double near = 0, far = 0;
  std::vector<Frame> frames;
  std::optional<GroundTruthInfo> ground_truth;

  std::string dir;  // directory holding the manifest; not serialized

  std::vector<const Frame*> split(const std::string& name) const;
  Camera camera_for(const Frame& f) const;
};

struct GtMeta {
  double depth_scale_cm = 0;   // full-range depth encoded by 65535
  double scene_extent_cm = 0;  // largest scene AABB side
  std::vector<oracle::Slab> slabs;
};

void save_manifest(const DatasetManifest& m, const std::string& path);
DatasetManifest load_manifest(const std::string& path, bool validate = true);

// Rejects non-rigid transforms, missing/mis-sized images, unknown splits.
void validate_manifest(const DatasetManifest& m);

void save_gt_meta(const GtMeta& meta, const std::string& path);
GtMeta load_gt_meta(const std::string& path);

void save_xyz(const std::vector<Vec3>& points, const std::string& path);
std::vector<Vec3> load_xyz(const std::string& path);

struct LoadedView {
  Camera cam;
  Image image;
  std::string file_path;
};

std::vector<LoadedView> load_views(const DatasetManifest& m,
                                   const std::string& split);

}  // namespace gf
