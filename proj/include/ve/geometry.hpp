#pragma once

#include <algorithm>
#include <cmath>

namespace ve {

struct Vec3 {
  double x = 0, y = 0, z = 0;

  Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
  Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
  Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
  Vec3 operator-() const { return {-x, -y, -z}; }

  double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
  Vec3 cross(const Vec3& o) const {
    return {y * o.z - z * o.y, z * o.x - x * o.z, x * o.y - y * o.x};
  }
  double norm() const { return std::sqrt(dot(*this)); }
  Vec3 normalized() const {
    double n = norm();
    return n > 0 ? Vec3{x / n, y / n, z / n} : Vec3{};
  }
};

inline Vec3 operator*(double s, const Vec3& v) { return v * s; }

// Axis-aligned box given by min/max corners.
struct Aabb {
  Vec3 lo, hi;

  bool contains(const Vec3& p) const {
    return p.x >= lo.x && p.x <= hi.x && p.y >= lo.y && p.y <= hi.y &&
           p.z >= lo.z && p.z <= hi.z;
  }

  bool overlaps(const Aabb& o) const {
    return lo.x < o.hi.x && hi.x > o.lo.x && lo.y < o.hi.y && hi.y > o.lo.y &&
           lo.z < o.hi.z && hi.z > o.lo.z;
  }

  // Euclidean distance from a point to the box (0 inside).
  double distance(const Vec3& p) const {
    double dx = std::max({lo.x - p.x, 0.0, p.x - hi.x});
    double dy = std::max({lo.y - p.y, 0.0, p.y - hi.y});
    double dz = std::max({lo.z - p.z, 0.0, p.z - hi.z});
    return std::sqrt(dx * dx + dy * dy + dz * dz);
  }

  // Slab test for ray p + t*d; on hit returns entry/exit params and the
  // axis (0..2) plus side sign of the entry face.
  bool intersect(const Vec3& p, const Vec3& d, double& t_in, double& t_out,
                 int& axis_in, int& sign_in) const {
    t_in = -1e30;
    t_out = 1e30;
    axis_in = -1;
    sign_in = 0;
    const double pc[3] = {p.x, p.y, p.z};
    const double dc[3] = {d.x, d.y, d.z};
    const double loc[3] = {lo.x, lo.y, lo.z};
    const double hic[3] = {hi.x, hi.y, hi.z};
    for (int a = 0; a < 3; ++a) {
      if (std::abs(dc[a]) < 1e-15) {
        if (pc[a] < loc[a] || pc[a] > hic[a]) return false;
        continue;
      }
      double inv = 1.0 / dc[a];
      double t0 = (loc[a] - pc[a]) * inv;
      double t1 = (hic[a] - pc[a]) * inv;
      int s = -1;
      if (t0 > t1) {
        std::swap(t0, t1);
        s = 1;
      }
      if (t0 > t_in) {
        t_in = t0;
        axis_in = a;
        sign_in = s;
      }
      t_out = std::min(t_out, t1);
      if (t_in > t_out) return false;
    }
    return true;
  }

  // True if the open segment (a, b) passes through the box.
  bool blocks_segment(const Vec3& a, const Vec3& b) const {
    Vec3 d = b - a;
    double t_in, t_out;
    int axis, sign;
    if (!intersect(a, d, t_in, t_out, axis, sign)) return false;
    return t_out > 1e-9 && t_in < 1.0 - 1e-9 && t_out > t_in;
  }
};

}  // namespace ve
