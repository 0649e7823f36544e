#pragma once

#include <array>

#include "glassfield/common.hpp"

namespace gf {

// Pinhole camera. Pose is a row-major 4x4 camera-to-world transform using
// the usual synthetic-scene convention: camera looks along -z, +x right,
// +y up. All distances in cm.
struct Camera {
  int width = 0;
  int height = 0;
  double camera_angle_x = 0;        // horizontal field of view, radians
  std::array<double, 16> c2w{};     // row-major 4x4
  double near = 0.1;
  double far = 100.0;

  double focal() const {
    return 0.5 * width / std::tan(0.5 * camera_angle_x);
  }

  Vec3 origin() const { return {c2w[3], c2w[7], c2w[11]}; }
  Vec3 rotate(const Vec3& v) const {
    return {c2w[0] * v.x + c2w[1] * v.y + c2w[2] * v.z,
            c2w[4] * v.x + c2w[5] * v.y + c2w[6] * v.z,
            c2w[8] * v.x + c2w[9] * v.y + c2w[10] * v.z};
  }
};

struct Ray {
  Vec3 origin;
  Vec3 direction;  // unit
  double near = 0;
  double far = 0;
};

struct RayBatch {
  std::vector<Vec3> origins;
  std::vector<Vec3> directions;
  std::vector<double> nears;
  std::vector<double> fars;

  size_t size() const { return origins.size(); }
  void push_back(const Ray& r) {
    origins.push_back(r.origin);
    directions.push_back(r.direction);
    nears.push_back(r.near);
    fars.push_back(r.far);
  }
  Ray at(size_t i) const {
    return {origins[i], directions[i], nears[i], fars[i]};
  }
};

// u,v are continuous pixel coordinates in [0,W]x[0,H]; a pixel center is at
// (i+0.5, j+0.5).
inline Ray generate_ray(const Camera& cam, double u, double v) {
  if (!(cam.camera_angle_x > 0) || cam.camera_angle_x >= M_PI ||
      cam.width <= 0 || cam.height <= 0)
    throw std::invalid_argument("generate_ray: invalid camera intrinsics");
  if (u < 0 || u > cam.width || v < 0 || v > cam.height)
    throw std::invalid_argument("generate_ray: pixel (" + std::to_string(u) +
                                "," + std::to_string(v) + ") outside " +
                                std::to_string(cam.width) + "x" +
                                std::to_string(cam.height) + " image");
  double f = cam.focal();
  Vec3 dir_cam{(u - 0.5 * cam.width) / f, -(v - 0.5 * cam.height) / f, -1.0};
  Vec3 dir = cam.rotate(dir_cam).normalized();
  return {cam.origin(), dir, cam.near, cam.far};
}

inline RayBatch generate_rays(const Camera& cam,
                              const std::vector<std::pair<double, double>>& pixels) {
  RayBatch batch;
  for (auto& [u, v] : pixels) batch.push_back(generate_ray(cam, u, v));
  return batch;
}

}  // namespace gf
