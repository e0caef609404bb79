#include "ve/render.hpp"

#include <cmath>
#include <stdexcept>

namespace ve {

RayHit cast_ray(const Scene& scene, const Vec3& origin, const Vec3& dir) {
  RayHit best;
  best.t = 1e30;

  // Room walls, seen from inside: first positive plane crossing.
  const double oc[3] = {origin.x, origin.y, origin.z};
  const double dc[3] = {dir.x, dir.y, dir.z};
  const double ext[3] = {scene.extents.x, scene.extents.y, scene.extents.z};
  for (int a = 0; a < 3; ++a) {
    if (std::abs(dc[a]) < 1e-15) continue;
    for (int side = 0; side < 2; ++side) {
      double plane = side == 0 ? 0.0 : ext[a];
      double t = (plane - oc[a]) / dc[a];
      if (t <= 1e-9 || t >= best.t) continue;
      Vec3 p = origin + dir * t;
      const double pc[3] = {p.x, p.y, p.z};
      int b = (a + 1) % 3, c = (a + 2) % 3;
      if (pc[b] < -1e-9 || pc[b] > ext[b] + 1e-9 || pc[c] < -1e-9 ||
          pc[c] > ext[c] + 1e-9)
        continue;
      best.t = t;
      best.hit = true;
      best.normal = {0, 0, 0};
      double* n = &best.normal.x;
      n[a] = side == 0 ? 1.0 : -1.0;  // into the room
      // wall order: -x +x -y +y floor ceiling
      best.material = &scene.wall_materials[a * 2 + side];
    }
  }

  for (const auto& ob : scene.obstacles) {
    double t_in, t_out;
    int axis, sign;
    if (!ob.box.intersect(origin, dir, t_in, t_out, axis, sign)) continue;
    if (t_in <= 1e-9 || t_in >= best.t) continue;
    best.t = t_in;
    best.hit = true;
    best.normal = {0, 0, 0};
    double* n = &best.normal.x;
    n[axis] = static_cast<double>(sign);
    best.material = &ob.material;
  }
  return best;
}

std::pair<RGBImage, DepthMap> render_rgbd(const Scene& scene,
                                          const AgentPose& pose,
                                          const Camera& cam) {
  cam.validate();
  if (!scene.in_free_space(pose.position))
    throw std::invalid_argument("agent pose is inside geometry");

  const Vec3 fwd = forward_of(pose.orientation);
  const Vec3 right = right_of(pose.orientation);
  const Vec3 down = {0, 0, -1};  // camera y axis in world coordinates

  const double tanx = std::tan(cam.horizontal_fov * M_PI / 360.0);
  const double tany = tanx * cam.height / cam.width;

  RGBImage rgb{cam.height, cam.width,
               std::vector<float>(static_cast<size_t>(cam.height) * cam.width * 3)};
  DepthMap depth{cam.height, cam.width,
                 std::vector<float>(static_cast<size_t>(cam.height) * cam.width)};

  for (int i = 0; i < cam.height; ++i) {
    double v = (2.0 * (i + 0.5) / cam.height - 1.0) * tany;
    for (int j = 0; j < cam.width; ++j) {
      double u = (2.0 * (j + 0.5) / cam.width - 1.0) * tanx;
      // Direction scaled so the ray parameter equals planar z-depth.
      Vec3 dir = fwd + right * u + down * v;
      RayHit hit = cast_ray(scene, pose.position, dir);
      double d = hit.hit ? hit.t : cam.max_depth;
      depth.at(i, j) = static_cast<float>(std::min(d, cam.max_depth));
      if (hit.hit) {
        double lambert = std::abs(hit.normal.dot(dir.normalized()));
        for (int c = 0; c < 3; ++c)
          rgb.at(i, j, c) = static_cast<float>(hit.material->albedo[c] * lambert);
      }
    }
  }
  return {std::move(rgb), std::move(depth)};
}

NormalMap depth_to_normals(const DepthMap& depth, const Camera& cam) {
  cam.validate();
  const int h = depth.height, w = depth.width;
  NormalMap nm{h, w, std::vector<float>(static_cast<size_t>(h) * w * 3),
               std::vector<uint8_t>(static_cast<size_t>(h) * w, 0)};

  const double tanx = std::tan(cam.horizontal_fov * M_PI / 360.0);
  const double tany = tanx * h / static_cast<double>(w);
  auto point = [&](int i, int j) -> Vec3 {
    double d = depth.at(i, j);
    double u = (2.0 * (j + 0.5) / w - 1.0) * tanx;
    double v = (2.0 * (i + 0.5) / h - 1.0) * tany;
    return {d * u, d * v, d};
  };

  const double jump = 0.1;  // meters; discontinuity threshold
  for (int i = 1; i < h - 1; ++i) {
    for (int j = 1; j < w - 1; ++j) {
      double d0 = depth.at(i, j);
      if (std::abs(depth.at(i, j - 1) - d0) > jump ||
          std::abs(depth.at(i, j + 1) - d0) > jump ||
          std::abs(depth.at(i - 1, j) - d0) > jump ||
          std::abs(depth.at(i + 1, j) - d0) > jump)
        continue;
      Vec3 tx = point(i, j + 1) - point(i, j - 1);
      Vec3 ty = point(i + 1, j) - point(i - 1, j);
      Vec3 n = tx.cross(ty);
      double len = n.norm();
      if (len < 1e-12) continue;
      n = n * (1.0 / len);
      if (n.dot(point(i, j)) > 0) n = -n;  // face the camera
      nm.at(i, j, 0) = static_cast<float>(n.x);
      nm.at(i, j, 1) = static_cast<float>(n.y);
      nm.at(i, j, 2) = static_cast<float>(n.z);
      nm.valid[i * w + j] = 1;
    }
  }
  return nm;
}

}  // namespace ve
