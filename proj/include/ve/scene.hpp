#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "ve/geometry.hpp"

namespace ve {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Acoustic amplitude reflection coefficient plus a diffuse color.
struct Material {
  int id = 0;
  double reflection = 0.5;              // beta, in [0,1]
  std::array<double, 3> albedo = {0.5, 0.5, 0.5};
};

struct Obstacle {
  Aabb box;
  Material material;
};

// Wall index convention: 0:-x 1:+x 2:-y 3:+y 4:floor(-z) 5:ceiling(+z)
struct Scene {
  Vec3 extents;                         // (Lx, Ly, Lz), meters
  std::array<Material, 6> wall_materials;
  std::vector<Obstacle> obstacles;
  uint64_t seed = 0;

  bool inside_room(const Vec3& p) const {
    return p.x > 0 && p.x < extents.x && p.y > 0 && p.y < extents.y &&
           p.z > 0 && p.z < extents.z;
  }

  bool in_free_space(const Vec3& p) const {
    if (!inside_room(p)) return false;
    for (const auto& ob : obstacles)
      if (ob.box.contains(p)) return false;
    return true;
  }
};

// Azimuth convention: degrees clockwise from +x seen from above (z up),
// so +90 deg is the agent turning right.
enum class Orientation : int { Deg0 = 0, Deg90 = 90, Deg180 = 180, Deg270 = 270 };

inline Vec3 forward_of(Orientation o) {
  switch (o) {
    case Orientation::Deg0: return {1, 0, 0};
    case Orientation::Deg90: return {0, -1, 0};
    case Orientation::Deg180: return {-1, 0, 0};
    case Orientation::Deg270: return {0, 1, 0};
  }
  return {1, 0, 0};
}

inline Vec3 right_of(Orientation o) {
  // right = forward turned +90 deg (clockwise from above)
  return forward_of(static_cast<Orientation>((static_cast<int>(o) + 90) % 360));
}

inline Orientation orientation_from_degrees(int deg) {
  int d = ((deg % 360) + 360) % 360;
  if (d != 0 && d != 90 && d != 180 && d != 270)
    throw std::invalid_argument("orientation must be a multiple of 90");
  return static_cast<Orientation>(d);
}

constexpr std::array<Orientation, 4> kOrientations = {
    Orientation::Deg0, Orientation::Deg90, Orientation::Deg180,
    Orientation::Deg270};

struct AgentPose {
  Vec3 position;                        // z = sensor height
  Orientation orientation = Orientation::Deg0;
};

struct GridSpec {
  double spacing = 0.5;                 // meters
  double clearance = 0.5;               // min distance to any surface
  double sensor_height = 1.5;
};

struct SceneGenConfig {
  double room_min_x = 3.0, room_max_x = 6.0;
  double room_min_y = 3.0, room_max_y = 6.0;
  double room_min_z = 2.6, room_max_z = 3.4;
  int obstacles_min = 1, obstacles_max = 3;
  double obstacle_min_size = 0.3, obstacle_max_size = 1.2;
  std::vector<Material> palette;        // empty -> built-in default palette

  void validate() const;
};

std::vector<Material> default_palette();

// Deterministic in (seed, cfg).
Scene generate_scene(uint64_t seed, const SceneGenConfig& cfg);

// Grid poses at z = sensor_height, >= clearance from every wall and
// obstacle, 4 orientations per surviving point. Row-major by x then y,
// orientation ascending.
std::vector<AgentPose> navigable_poses(const Scene& scene, const GridSpec& grid);

std::string scene_to_json(const Scene& scene);
Scene scene_from_json(const std::string& text);

}  // namespace ve
