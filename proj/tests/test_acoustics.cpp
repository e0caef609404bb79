#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"
#include "ve/acoustics.hpp"
#include "ve/dsp.hpp"
#include "ve/pcg32.hpp"

using namespace ve;

namespace {

Scene uniform_room(double lx, double ly, double lz, double beta) {
  Scene s;
  s.extents = {lx, ly, lz};
  for (int i = 0; i < 6; ++i) {
    s.wall_materials[i].id = i;
    s.wall_materials[i].reflection = beta;
    s.wall_materials[i].albedo = {0.5, 0.5, 0.5};
  }
  return s;
}

double energy_of_reflections(const Scene& scene, const AgentPose& pose,
                             const ListenerModel& lm, int max_order,
                             double sr, int len) {
  auto arrivals =
      compute_image_sources(scene, pose.position, pose, lm, max_order);
  std::vector<ImageSourceArrival> refl;
  for (const auto& a : arrivals)
    if (a.order >= 1) refl.push_back(a);
  auto rir = synthesize_binaural_rir(refl, pose, lm, sr, len);
  double e = 0;
  for (double v : rir.left) e += v * v;
  for (double v : rir.right) e += v * v;
  return e;
}

}  // namespace

TEST_CASE("chirp length and first sample") {
  Waveform w = make_chirp(20, 20000, 0.003, 44100);
  CHECK(w.samples.size() == 132);
  CHECK(w.samples[0] == doctest::Approx(0.0));
  CHECK_THROWS(make_chirp(20, 23000, 0.003, 44100));  // above Nyquist
}

TEST_CASE("chirp terminal instantaneous frequency from zero crossings") {
  const double f0 = 20, f1 = 20000, T = 0.003, sr = 44100;
  Waveform w = make_chirp(f0, f1, T, sr);
  // interpolated zero crossings over the sweep
  std::vector<double> crossings;
  for (size_t k = 1; k < w.samples.size(); ++k) {
    double a = w.samples[k - 1], b = w.samples[k];
    if ((a <= 0 && b > 0) || (a >= 0 && b < 0)) {
      if (a == b) continue;
      crossings.push_back((k - 1 + a / (a - b)) / sr);
    }
  }
  REQUIRE(crossings.size() > 20);
  // each crossing gap gives frequency at the gap midpoint; instantaneous
  // frequency is linear in t, so fit f(t) = c0 + c1 t and read f(T)
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int n = 0;
  for (size_t i = 1; i < crossings.size(); ++i) {
    double dt = crossings[i] - crossings[i - 1];
    double t_mid = 0.5 * (crossings[i] + crossings[i - 1]);
    double f = 1.0 / (2.0 * dt);
    // above ~0.2 sr the linear interpolation of crossings is biased;
    // instantaneous frequency of a linear sweep is linear in t, so a fit
    // on the well-sampled region extrapolates exactly to t = T
    if (f > 0.2 * sr) continue;
    sx += t_mid;
    sy += f;
    sxx += t_mid * t_mid;
    sxy += t_mid * f;
    ++n;
  }
  double c1 = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  double c0 = (sy - c1 * sx) / n;
  double f_end = c0 + c1 * T;
  CHECK(std::abs(f_end - f1) / f1 < 0.01);
}

TEST_CASE("empty shoebox image source counts") {
  Scene s = uniform_room(4, 5, 3, 0.8);
  AgentPose pose{{2, 2.5, 1.5}, Orientation::Deg0};
  ListenerModel lm;
  auto order1 = compute_image_sources(s, pose.position, pose, lm, 1);
  CHECK(order1.size() == 7);
  auto order0 = compute_image_sources(s, pose.position, pose, lm, 0);
  REQUIRE(order0.size() == 1);
  CHECK(order0[0].order == 0);
  CHECK(order0[0].virtual_position.x == doctest::Approx(2.0));
  CHECK(order0[0].virtual_position.y == doctest::Approx(2.5));
  CHECK(order0[0].virtual_position.z == doctest::Approx(1.5));
  CHECK(order0[0].amplitude == doctest::Approx(1.0));
  CHECK_THROWS(compute_image_sources(s, pose.position, pose, lm, -1));
}

TEST_CASE("absorbing walls zero out every reflection") {
  Scene s = uniform_room(4, 5, 3, 0.0);
  AgentPose pose{{2, 2.5, 1.5}, Orientation::Deg0};
  auto arrivals = compute_image_sources(s, pose.position, pose, {}, 2);
  for (const auto& a : arrivals) {
    if (a.order == 0)
      CHECK(a.amplitude == doctest::Approx(1.0));
    else
      CHECK(a.amplitude == doctest::Approx(0.0));
  }
}

TEST_CASE("arrival ordering is deterministic and sorted") {
  Scene s = uniform_room(4, 5, 3, 0.7);
  AgentPose pose{{1.2, 3.1, 1.5}, Orientation::Deg90};
  auto a = compute_image_sources(s, pose.position, pose, {}, 3);
  auto b = compute_image_sources(s, pose.position, pose, {}, 3);
  REQUIRE(a.size() == b.size());
  for (size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].order == b[i].order);
    CHECK(a[i].virtual_position.x == b[i].virtual_position.x);
    if (i) CHECK(a[i - 1].order <= a[i].order);
  }
}

TEST_CASE("single-wall echo delay matches 2d/c within one sample") {
  Pcg32 rng(123);
  const double sr = 44100;
  ListenerModel lm;
  for (int trial = 0; trial < 20; ++trial) {
    double lx = rng.uniform(3.0, 8.0);
    double d = rng.uniform(0.8, lx / 2 - 0.2);  // distance to the +x wall
    Scene s = uniform_room(lx, rng.uniform(3.0, 8.0), rng.uniform(2.6, 3.4),
                           0.0);
    s.wall_materials[1].reflection = 0.9;  // only the +x wall reflects
    AgentPose pose{{lx - d, s.extents.y / 2, s.extents.z / 2},
                   Orientation::Deg0};
    auto arrivals = compute_image_sources(s, pose.position, pose, lm, 1);
    std::vector<ImageSourceArrival> echo;
    for (const auto& a : arrivals)
      if (a.order == 1 && a.amplitude > 0) echo.push_back(a);
    REQUIRE(echo.size() == 1);
    int len = static_cast<int>(sr * 0.1);
    auto rir = synthesize_binaural_rir(echo, pose, lm, sr, len);
    int peak = 0;
    for (int i = 1; i < len; ++i)
      if (std::abs(rir.left[i]) > std::abs(rir.left[peak])) peak = i;
    double expected = 2.0 * d / kSpeedOfSound * sr;
    CHECK(std::abs(peak - expected) <= 1.0);
  }
}

TEST_CASE("wall at 1.715 m puts the echo at sample 441") {
  Scene s = uniform_room(3.43, 6, 3, 0.0);
  s.wall_materials[1].reflection = 0.9;
  AgentPose pose{{3.43 - 1.715, 3.0, 1.5}, Orientation::Deg0};
  auto arrivals = compute_image_sources(s, pose.position, pose, {}, 1);
  std::vector<ImageSourceArrival> echo;
  for (const auto& a : arrivals)
    if (a.order == 1 && a.amplitude > 0) echo.push_back(a);
  REQUIRE(echo.size() == 1);
  auto rir = synthesize_binaural_rir(echo, pose, {}, 44100, 1000);
  int peak = 0;
  for (int i = 1; i < 1000; ++i)
    if (std::abs(rir.left[i]) > std::abs(rir.left[peak])) peak = i;
  CHECK(std::abs(peak - 441) <= 1);
}

TEST_CASE("free-field impulse matches the analytic delay and gain") {
  Scene s = uniform_room(10, 10, 10, 0.0);
  ListenerModel lm;
  AgentPose pose{{3, 5, 5}, Orientation::Deg0};
  Vec3 source{6.2, 5.7, 5.1};
  auto arrivals = compute_image_sources(s, source, pose, lm, 0);
  REQUIRE(arrivals.size() == 1);
  auto rir = synthesize_binaural_rir(arrivals, pose, lm, 44100, 4096);

  // left ear sits at position + head_radius * (-lateral)
  Vec3 lateral = right_of(pose.orientation);
  for (int side = 0; side < 2; ++side) {
    Vec3 ear = pose.position + lateral * (side == 0 ? -lm.head_radius
                                                    : lm.head_radius);
    Vec3 to_src = source - ear;
    double r = std::max(to_src.norm(), lm.head_radius);
    Vec3 outward = side == 0 ? -lateral : lateral;
    double cosphi = to_src.normalized().dot(outward);
    double shadow =
        lm.shadow_floor + (1.0 - lm.shadow_floor) * (1.0 + cosphi) / 2.0;
    double gain = shadow / r;
    double delay = r / kSpeedOfSound * 44100.0;

    const auto& ch = side == 0 ? rir.left : rir.right;
    double total = 0;
    int first_nonzero = -1;
    for (int i = 0; i < 4096; ++i) {
      total += ch[i];
      if (first_nonzero < 0 && std::abs(ch[i]) > 0) first_nonzero = i;
    }
    CHECK(std::abs(total - gain) < 1e-6);
    CHECK(std::abs(first_nonzero - delay) <= 1.0);
  }
}

TEST_CASE("direct-path reciprocity") {
  Scene s = uniform_room(6, 6, 3, 0.0);
  ListenerModel lm;
  Vec3 a{2, 3, 1.5}, b{4.5, 2.2, 1.4};
  auto fwd = compute_image_sources(s, b, {a, Orientation::Deg0}, lm, 0);
  auto rev = compute_image_sources(s, a, {b, Orientation::Deg0}, lm, 0);
  double r_fwd = (fwd[0].virtual_position - a).norm();
  double r_rev = (rev[0].virtual_position - b).norm();
  CHECK(r_fwd == doctest::Approx(r_rev).epsilon(1e-12));
}

TEST_CASE("interaural cues for a lateral source") {
  Scene s = uniform_room(10, 10, 10, 0.0);
  ListenerModel lm;
  AgentPose pose{{5, 5, 5}, Orientation::Deg0};  // facing +x, right is -y
  Vec3 source{5, 3, 5};                          // 2 m to the agent's right
  auto arrivals = compute_image_sources(s, source, pose, lm, 0);
  auto rir = synthesize_binaural_rir(arrivals, pose, lm, 44100, 2048);
  auto first_idx = [](const std::vector<double>& ch) {
    for (size_t i = 0; i < ch.size(); ++i)
      if (std::abs(ch[i]) > 0) return static_cast<int>(i);
    return -1;
  };
  auto peak_gain = [](const std::vector<double>& ch) {
    double m = 0;
    for (double v : ch) m = std::max(m, std::abs(v));
    return m;
  };
  CHECK(first_idx(rir.right) < first_idx(rir.left));
  CHECK(peak_gain(rir.right) > peak_gain(rir.left));

  // source straight ahead: symmetric
  auto ahead = compute_image_sources(s, {7, 5, 5}, pose, lm, 0);
  auto rir2 = synthesize_binaural_rir(ahead, pose, lm, 44100, 2048);
  CHECK(first_idx(rir2.left) == first_idx(rir2.right));
  CHECK(peak_gain(rir2.left) == doctest::Approx(peak_gain(rir2.right)));
}

TEST_CASE("echo energy is monotone in wall reflectivity") {
  ListenerModel lm;
  Pcg32 rng(9);
  for (int trial = 0; trial < 5; ++trial) {
    double beta = rng.uniform(0.4, 0.9);
    Scene hi = uniform_room(4.4, 5.2, 3.0, beta);
    Scene lo = hi;
    for (auto& m : lo.wall_materials) m.reflection *= 0.5;
    AgentPose pose{{1.7, 2.4, 1.5}, Orientation::Deg90};
    double e_hi = energy_of_reflections(hi, pose, lm, 2, 44100, 4096);
    double e_lo = energy_of_reflections(lo, pose, lm, 2, 44100, 4096);
    CHECK(e_lo <= e_hi + 1e-12);
  }
}

TEST_CASE("occluded arrivals are dropped") {
  Scene s = uniform_room(6, 6, 3, 0.9);
  AgentPose pose{{1, 3, 1.5}, Orientation::Deg0};
  auto open = compute_image_sources(s, pose.position, pose, {}, 1);
  // slab between the listener and the +x wall blocks that wall's image
  Obstacle ob;
  ob.box = {{3.0, 0.5, 0.0}, {3.3, 5.5, 3.0}};
  ob.material = default_palette()[0];
  s.obstacles.push_back(ob);
  auto blocked = compute_image_sources(s, pose.position, pose, {}, 1);
  CHECK(blocked.size() < open.size());
}

TEST_CASE("simulated echo clip length and determinism") {
  Scene s = generate_scene(3, SceneGenConfig{});
  auto poses = navigable_poses(s, GridSpec{1.0, 0.5, 1.5});
  REQUIRE(!poses.empty());
  EchoConfig cfg;
  auto e1 = simulate_echo(s, poses[0], cfg);
  auto e2 = simulate_echo(s, poses[0], cfg);
  CHECK(e1.left.size() == 2646);
  CHECK(e1.right.size() == 2646);
  CHECK(e1.left == e2.left);
  CHECK(e1.right == e2.right);
}

TEST_CASE("orientation changes the echo in an asymmetric room") {
  Scene s = uniform_room(4, 5, 3, 0.8);
  s.wall_materials[0].reflection = 0.3;  // make the room acoustically lopsided
  s.wall_materials[3].reflection = 0.9;
  Obstacle ob;
  ob.box = {{3.0, 0.8, 0.0}, {3.6, 1.6, 1.2}};
  ob.material = default_palette()[1];
  s.obstacles.push_back(ob);
  EchoConfig cfg;
  AgentPose p0{{1.5, 2.5, 1.5}, Orientation::Deg0};
  AgentPose p90{{1.5, 2.5, 1.5}, Orientation::Deg90};
  auto a = simulate_echo(s, p0, cfg);
  auto b = simulate_echo(s, p90, cfg);
  double max_diff = 0;
  for (size_t i = 0; i < a.left.size(); ++i) {
    max_diff = std::max(max_diff, std::abs(a.left[i] - b.left[i]));
    max_diff = std::max(max_diff, std::abs(a.right[i] - b.right[i]));
  }
  CHECK(max_diff > 1e-6);
}

TEST_CASE("echoes at the four orientations of a pose are pairwise distinct") {
  Scene s = generate_scene(17, SceneGenConfig{});
  auto poses = navigable_poses(s, GridSpec{1.0, 0.5, 1.5});
  REQUIRE(poses.size() >= 4);
  EchoConfig cfg;
  std::vector<BinauralWaveform> echoes;
  for (int k = 0; k < 4; ++k)
    echoes.push_back(simulate_echo(
        s, {poses[0].position, kOrientations[k]}, cfg));
  for (int i = 0; i < 4; ++i)
    for (int j = i + 1; j < 4; ++j) {
      double max_diff = 0;
      for (size_t t = 0; t < echoes[i].left.size(); ++t) {
        max_diff = std::max(max_diff,
                            std::abs(echoes[i].left[t] - echoes[j].left[t]));
        max_diff = std::max(max_diff,
                            std::abs(echoes[i].right[t] - echoes[j].right[t]));
      }
      CHECK(max_diff > 1e-9);
    }
}
