#pragma once

#include <vector>

#include "ve/scene.hpp"

namespace ve {

struct Waveform {
  std::vector<double> samples;
  double sample_rate = 44100.0;
};

struct BinauralWaveform {
  std::vector<double> left, right;
  double sample_rate = 44100.0;
};

struct ImageSourceArrival {
  Vec3 virtual_position;
  int order = 0;       // number of wall reflections; 0 = direct sound
  double amplitude = 1.0;  // product of wall reflection coefficients
};

// Analytic two-ear stand-in for a measured HRTF: ears offset from the
// head center along the lateral axis, with a cardioid-like shadow gain.
struct ListenerModel {
  double head_radius = 0.0875;  // meters
  double shadow_floor = 0.6;    // gain at the fully shadowed side, in (0,1]
};

constexpr double kSpeedOfSound = 343.0;  // m/s

// Linear sweep sin(2*pi*(f0*t + (f1-f0)*t^2/(2T))).
Waveform make_chirp(double f0, double f1, double duration, double sr);

// Shoebox mirror expansion up to max_order reflections. Arrivals whose
// straight path from the virtual source to either ear is blocked by an
// obstacle are dropped. Ordering: (order, virtual position lexicographic).
std::vector<ImageSourceArrival> compute_image_sources(const Scene& scene,
                                                      const Vec3& source,
                                                      const AgentPose& pose,
                                                      const ListenerModel& listener,
                                                      int max_order);

// Per arrival and ear: delay r/c with linear-interpolated fractional
// placement, gain amplitude/r times the head-shadow term.
BinauralWaveform synthesize_binaural_rir(const std::vector<ImageSourceArrival>& arrivals,
                                         const AgentPose& pose,
                                         const ListenerModel& listener,
                                         double sr, int length);

struct EchoConfig {
  double chirp_f0 = 20.0;
  double chirp_f1 = 20000.0;
  double chirp_duration = 0.003;
  double sample_rate = 44100.0;
  double clip_duration = 0.060;
  int max_order = 3;
  ListenerModel listener;
};

// Source co-located with the head center; RIR convolved with the chirp,
// truncated to round(clip * sr) samples per channel.
BinauralWaveform simulate_echo(const Scene& scene, const AgentPose& pose,
                               const Waveform& chirp, double clip,
                               int max_order, const ListenerModel& listener);

BinauralWaveform simulate_echo(const Scene& scene, const AgentPose& pose,
                               const EchoConfig& cfg);

}  // namespace ve
