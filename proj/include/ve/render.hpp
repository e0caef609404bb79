#pragma once

#include <vector>

#include "ve/scene.hpp"

namespace ve {

// Camera frame is right-handed: x right, y down, z forward.
struct Camera {
  double horizontal_fov = 90.0;  // degrees
  int width = 64;
  int height = 64;
  double max_depth = 10.0;       // meters

  void validate() const {
    if (!(horizontal_fov > 0 && horizontal_fov < 180))
      throw ConfigError("camera fov must be in (0, 180)");
    if (width < 8 || height < 8)
      throw ConfigError("camera resolution must be at least 8x8");
    if (!(max_depth > 0)) throw ConfigError("camera max_depth must be > 0");
  }
};

// H*W*3 values in [0,1], row-major, channel-last.
struct RGBImage {
  int height = 0, width = 0;
  std::vector<float> data;
  float& at(int i, int j, int c) { return data[(i * width + j) * 3 + c]; }
  float at(int i, int j, int c) const { return data[(i * width + j) * 3 + c]; }
};

// Planar z-depth in meters (distance along the view axis, not ray length).
struct DepthMap {
  int height = 0, width = 0;
  std::vector<float> data;
  float& at(int i, int j) { return data[i * width + j]; }
  float at(int i, int j) const { return data[i * width + j]; }
};

// Unit normals in the camera frame plus a per-pixel validity mask.
struct NormalMap {
  int height = 0, width = 0;
  std::vector<float> data;   // H*W*3
  std::vector<uint8_t> valid;  // H*W
  float& at(int i, int j, int c) { return data[(i * width + j) * 3 + c]; }
  float at(int i, int j, int c) const { return data[(i * width + j) * 3 + c]; }
};

struct RayHit {
  double t = 0;          // planar depth (ray parameterized so t = z-depth)
  Vec3 normal;           // world-frame surface normal at the hit
  const Material* material = nullptr;
  bool hit = false;
};

// Nearest surface along p + t*d, d scaled so t equals planar depth.
RayHit cast_ray(const Scene& scene, const Vec3& origin, const Vec3& dir);

// One pinhole primary ray per pixel; headlight Lambertian shading
// (albedo * |cos theta|), depth clamped to cam.max_depth.
std::pair<RGBImage, DepthMap> render_rgbd(const Scene& scene,
                                          const AgentPose& pose,
                                          const Camera& cam);

// Normals from central-difference tangents of the back-projected depth.
// Border pixels and pixels next to depth discontinuities (|dd| > 0.1 m)
// are masked invalid; normals face the camera (n . view < 0).
NormalMap depth_to_normals(const DepthMap& depth, const Camera& cam);

}  // namespace ve
