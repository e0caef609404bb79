#include "ve/acoustics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "ve/dsp.hpp"

namespace ve {

Waveform make_chirp(double f0, double f1, double duration, double sr) {
  if (!(f0 > 0 && f1 > f0)) throw std::invalid_argument("need 0 < f0 < f1");
  if (f1 >= sr / 2) throw std::invalid_argument("f1 must be below Nyquist");
  if (!(duration > 0)) throw std::invalid_argument("duration must be > 0");

  Waveform w;
  w.sample_rate = sr;
  const int n = static_cast<int>(std::lround(duration * sr));
  w.samples.resize(n);
  for (int k = 0; k < n; ++k) {
    double t = k / sr;
    double phase = 2.0 * M_PI * (f0 * t + (f1 - f0) * t * t / (2.0 * duration));
    w.samples[k] = std::sin(phase);
  }
  return w;
}

namespace {

struct AxisImage {
  double coord;
  int n_lo, n_hi;  // reflection counts off the low/high wall of the axis
};

// 1-D mirror images of coordinate s in [0, L]:
//   2kL + s with k reflections off each wall,
//   2kL - s with (k, k-1) or (1-k, -k) depending on the sign of k.
std::vector<AxisImage> axis_images(double s, double length, int max_order) {
  std::vector<AxisImage> out;
  for (int k = -(max_order / 2 + 1); k <= max_order / 2 + 1; ++k) {
    int order_even = 2 * std::abs(k);
    if (order_even <= max_order)
      out.push_back({2.0 * k * length + s, std::abs(k), std::abs(k)});
    int order_odd = std::abs(2 * k - 1);
    if (order_odd <= max_order) {
      AxisImage im;
      im.coord = 2.0 * k * length - s;
      if (k >= 1) {
        im.n_hi = k;
        im.n_lo = k - 1;
      } else {
        im.n_lo = 1 - k;
        im.n_hi = -k;
      }
      out.push_back(im);
    }
  }
  return out;
}

}  // namespace

std::vector<ImageSourceArrival> compute_image_sources(const Scene& scene,
                                                      const Vec3& source,
                                                      const AgentPose& pose,
                                                      const ListenerModel& listener,
                                                      int max_order) {
  if (max_order < 0) throw std::invalid_argument("max_order must be >= 0");
  if (!scene.inside_room(source))
    throw std::invalid_argument("source must be strictly inside the room");

  const auto xs = axis_images(source.x, scene.extents.x, max_order);
  const auto ys = axis_images(source.y, scene.extents.y, max_order);
  const auto zs = axis_images(source.z, scene.extents.z, max_order);
  const double beta[6] = {
      scene.wall_materials[0].reflection, scene.wall_materials[1].reflection,
      scene.wall_materials[2].reflection, scene.wall_materials[3].reflection,
      scene.wall_materials[4].reflection, scene.wall_materials[5].reflection};

  const Vec3 lateral = right_of(pose.orientation);
  const Vec3 ears[2] = {pose.position - lateral * listener.head_radius,
                        pose.position + lateral * listener.head_radius};

  std::vector<ImageSourceArrival> arrivals;
  for (const auto& ix : xs) {
    for (const auto& iy : ys) {
      int oxy = ix.n_lo + ix.n_hi + iy.n_lo + iy.n_hi;
      if (oxy > max_order) continue;
      for (const auto& iz : zs) {
        int order = oxy + iz.n_lo + iz.n_hi;
        if (order > max_order) continue;
        ImageSourceArrival a;
        a.virtual_position = {ix.coord, iy.coord, iz.coord};
        a.order = order;
        a.amplitude = std::pow(beta[0], ix.n_lo) * std::pow(beta[1], ix.n_hi) *
                      std::pow(beta[2], iy.n_lo) * std::pow(beta[3], iy.n_hi) *
                      std::pow(beta[4], iz.n_lo) * std::pow(beta[5], iz.n_hi);

        bool blocked = false;
        for (const auto& ob : scene.obstacles) {
          if (ob.box.blocks_segment(a.virtual_position, ears[0]) ||
              ob.box.blocks_segment(a.virtual_position, ears[1])) {
            blocked = true;
            break;
          }
        }
        if (!blocked) arrivals.push_back(a);
      }
    }
  }

  std::sort(arrivals.begin(), arrivals.end(),
            [](const ImageSourceArrival& a, const ImageSourceArrival& b) {
              if (a.order != b.order) return a.order < b.order;
              if (a.virtual_position.x != b.virtual_position.x)
                return a.virtual_position.x < b.virtual_position.x;
              if (a.virtual_position.y != b.virtual_position.y)
                return a.virtual_position.y < b.virtual_position.y;
              return a.virtual_position.z < b.virtual_position.z;
            });
  return arrivals;
}

BinauralWaveform synthesize_binaural_rir(const std::vector<ImageSourceArrival>& arrivals,
                                         const AgentPose& pose,
                                         const ListenerModel& listener,
                                         double sr, int length) {
  if (length <= 0) throw std::invalid_argument("rir length must be > 0");

  BinauralWaveform out;
  out.sample_rate = sr;
  out.left.assign(length, 0.0);
  out.right.assign(length, 0.0);

  const Vec3 lateral = right_of(pose.orientation);
  const Vec3 ear_pos[2] = {pose.position - lateral * listener.head_radius,
                           pose.position + lateral * listener.head_radius};
  const Vec3 ear_axis[2] = {-lateral, lateral};  // outward
  std::vector<double>* bufs[2] = {&out.left, &out.right};

  for (const auto& a : arrivals) {
    for (int e = 0; e < 2; ++e) {
      Vec3 to_src = a.virtual_position - ear_pos[e];
      double dist = to_src.norm();
      double r = std::max(dist, listener.head_radius);
      Vec3 dir = dist > 1e-12 ? to_src * (1.0 / dist)
                              : -ear_axis[e];  // co-located source: from the head center
      double cos_phi = std::clamp(dir.dot(ear_axis[e]), -1.0, 1.0);
      double shadow = listener.shadow_floor +
                      (1.0 - listener.shadow_floor) * (1.0 + cos_phi) / 2.0;
      double gain = a.amplitude / r * shadow;
      double delay = r / kSpeedOfSound * sr;
      int i0 = static_cast<int>(std::floor(delay));
      double frac = delay - i0;
      std::vector<double>& buf = *bufs[e];
      if (i0 >= 0 && i0 < length) buf[i0] += gain * (1.0 - frac);
      if (i0 + 1 >= 0 && i0 + 1 < length) buf[i0 + 1] += gain * frac;
    }
  }
  return out;
}

BinauralWaveform simulate_echo(const Scene& scene, const AgentPose& pose,
                               const Waveform& chirp, double clip,
                               int max_order, const ListenerModel& listener) {
  const double sr = chirp.sample_rate;
  const int clip_samples = static_cast<int>(std::lround(clip * sr));

  auto arrivals =
      compute_image_sources(scene, pose.position, pose, listener, max_order);
  BinauralWaveform rir =
      synthesize_binaural_rir(arrivals, pose, listener, sr, clip_samples);

  BinauralWaveform echo;
  echo.sample_rate = sr;
  auto conv_trunc = [&](const std::vector<double>& r) {
    std::vector<double> full = convolve_fft(r, chirp.samples);
    full.resize(clip_samples);
    return full;
  };
  echo.left = conv_trunc(rir.left);
  echo.right = conv_trunc(rir.right);
  return echo;
}

BinauralWaveform simulate_echo(const Scene& scene, const AgentPose& pose,
                               const EchoConfig& cfg) {
  Waveform chirp = make_chirp(cfg.chirp_f0, cfg.chirp_f1, cfg.chirp_duration,
                              cfg.sample_rate);
  return simulate_echo(scene, pose, chirp, cfg.clip_duration, cfg.max_order,
                       cfg.listener);
}

}  // namespace ve
