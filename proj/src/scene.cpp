#include "ve/scene.hpp"

#include <cmath>

#include "json.hpp"
#include "ve/pcg32.hpp"

namespace ve {

void SceneGenConfig::validate() const {
  auto check_range = [](double lo, double hi, const char* what) {
    if (!(lo > 0) || !(hi >= lo))
      throw ConfigError(std::string("invalid range for ") + what);
  };
  check_range(room_min_x, room_max_x, "room x extent");
  check_range(room_min_y, room_max_y, "room y extent");
  check_range(room_min_z, room_max_z, "room z extent");
  if (obstacles_min < 0 || obstacles_max < obstacles_min)
    throw ConfigError("invalid obstacle count range");
  check_range(obstacle_min_size, obstacle_max_size, "obstacle size");
  for (const auto& m : palette) {
    if (m.reflection < 0 || m.reflection > 1)
      throw ConfigError("material reflection outside [0,1]");
    for (double a : m.albedo)
      if (a < 0 || a > 1) throw ConfigError("material albedo outside [0,1]");
  }
}

std::vector<Material> default_palette() {
  return {
      {0, 0.85, {0.85, 0.82, 0.75}},   // plaster
      {1, 0.70, {0.55, 0.35, 0.20}},   // wood
      {2, 0.92, {0.60, 0.70, 0.80}},   // glass/tile
      {3, 0.40, {0.45, 0.10, 0.10}},   // curtain
      {4, 0.25, {0.30, 0.35, 0.20}},   // carpet
      {5, 0.60, {0.65, 0.65, 0.70}},   // concrete
      {6, 0.78, {0.20, 0.30, 0.55}},   // painted panel
      {7, 0.50, {0.75, 0.65, 0.35}},   // fabric panel
  };
}

Scene generate_scene(uint64_t seed, const SceneGenConfig& cfg) {
  cfg.validate();
  const std::vector<Material> palette =
      cfg.palette.empty() ? default_palette() : cfg.palette;

  Pcg32 rng(seed);
  Scene scene;
  scene.seed = seed;
  scene.extents = {rng.uniform(cfg.room_min_x, cfg.room_max_x),
                   rng.uniform(cfg.room_min_y, cfg.room_max_y),
                   rng.uniform(cfg.room_min_z, cfg.room_max_z)};
  for (int w = 0; w < 6; ++w)
    scene.wall_materials[w] = palette[rng.next_u32() % palette.size()];

  const int n_obstacles = rng.uniform_int(cfg.obstacles_min, cfg.obstacles_max);
  const int max_attempts = 64;
  for (int i = 0; i < n_obstacles; ++i) {
    for (int attempt = 0; attempt < max_attempts; ++attempt) {
      Vec3 size = {rng.uniform(cfg.obstacle_min_size, cfg.obstacle_max_size),
                   rng.uniform(cfg.obstacle_min_size, cfg.obstacle_max_size),
                   rng.uniform(cfg.obstacle_min_size, cfg.obstacle_max_size)};
      const double margin = 0.05;  // strictly inside the room
      if (size.x + 2 * margin >= scene.extents.x ||
          size.y + 2 * margin >= scene.extents.y ||
          size.z + 2 * margin >= scene.extents.z)
        continue;
      Vec3 lo = {rng.uniform(margin, scene.extents.x - size.x - margin),
                 rng.uniform(margin, scene.extents.y - size.y - margin), margin};
      Aabb box{lo, lo + size};
      bool ok = true;
      for (const auto& other : scene.obstacles)
        if (box.overlaps(other.box)) { ok = false; break; }
      if (!ok) continue;
      Obstacle ob;
      ob.box = box;
      ob.material = palette[rng.next_u32() % palette.size()];
      scene.obstacles.push_back(ob);
      break;
    }
  }
  return scene;
}

std::vector<AgentPose> navigable_poses(const Scene& scene, const GridSpec& grid) {
  if (grid.spacing <= 0) throw ConfigError("grid spacing must be > 0");
  if (grid.clearance < 0) throw ConfigError("grid clearance must be >= 0");

  std::vector<AgentPose> poses;
  const double c = grid.clearance;
  const double z = grid.sensor_height;
  if (z < c || z > scene.extents.z - c) return poses;
  const double eps = 1e-9;
  for (double x = c; x <= scene.extents.x - c + eps; x += grid.spacing) {
    for (double y = c; y <= scene.extents.y - c + eps; y += grid.spacing) {
      Vec3 p{x, y, z};
      bool clear = true;
      for (const auto& ob : scene.obstacles) {
        if (ob.box.contains(p) || ob.box.distance(p) < c) { clear = false; break; }
      }
      if (!clear) continue;
      for (Orientation o : kOrientations) poses.push_back({p, o});
    }
  }
  return poses;
}

namespace {

nlohmann::json material_to_json(const Material& m) {
  return {{"id", m.id},
          {"reflection", m.reflection},
          {"albedo", {m.albedo[0], m.albedo[1], m.albedo[2]}}};
}

Material material_from_json(const nlohmann::json& j) {
  Material m;
  m.id = j.at("id").get<int>();
  m.reflection = j.at("reflection").get<double>();
  auto a = j.at("albedo");
  m.albedo = {a.at(0).get<double>(), a.at(1).get<double>(), a.at(2).get<double>()};
  return m;
}

}  // namespace

std::string scene_to_json(const Scene& scene) {
  nlohmann::json j;
  j["extents"] = {scene.extents.x, scene.extents.y, scene.extents.z};
  j["seed"] = scene.seed;
  nlohmann::json walls = nlohmann::json::array();
  for (const auto& m : scene.wall_materials) walls.push_back(material_to_json(m));
  j["wall_materials"] = walls;
  nlohmann::json obs = nlohmann::json::array();
  for (const auto& ob : scene.obstacles) {
    obs.push_back({{"min", {ob.box.lo.x, ob.box.lo.y, ob.box.lo.z}},
                   {"max", {ob.box.hi.x, ob.box.hi.y, ob.box.hi.z}},
                   {"material", material_to_json(ob.material)}});
  }
  j["obstacles"] = obs;
  return j.dump(2);
}

Scene scene_from_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  Scene scene;
  auto e = j.at("extents");
  scene.extents = {e.at(0).get<double>(), e.at(1).get<double>(),
                   e.at(2).get<double>()};
  scene.seed = j.at("seed").get<uint64_t>();
  auto walls = j.at("wall_materials");
  for (int w = 0; w < 6; ++w)
    scene.wall_materials[w] = material_from_json(walls.at(w));
  for (const auto& jo : j.at("obstacles")) {
    Obstacle ob;
    auto lo = jo.at("min");
    auto hi = jo.at("max");
    ob.box.lo = {lo.at(0).get<double>(), lo.at(1).get<double>(), lo.at(2).get<double>()};
    ob.box.hi = {hi.at(0).get<double>(), hi.at(1).get<double>(), hi.at(2).get<double>()};
    ob.material = material_from_json(jo.at("material"));
    scene.obstacles.push_back(ob);
  }
  return scene;
}

}  // namespace ve
