// Acceptance gate: one pass/fail line per criterion, exit 0 only if all
// ten pass. Heavy criteria (1-5) train real models on a generated desk
// benchmark; the rest are fast property suites. All tolerances are pinned
// here.
#include <complex>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "json.hpp"
#include "ve/dsp.hpp"
#include "ve/gradcheck.hpp"
#include "ve/train.hpp"

using namespace ve;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Training lengths for the desk benchmark, tuned so the full ladder runs
// in a few CPU-hours while preserving the orderings under test.
constexpr int kEpochsDepth = 10;
constexpr int kEpochsPretext = 20;
constexpr int kEpochsNormals = 10;

struct Criterion {
  int id;
  std::string name;
  bool pass;
  std::string detail;
};

ExperimentConfig desk_config() {
  ExperimentConfig cfg;  // defaults are the desk-scale benchmark
  cfg.hyper.epochs_depth = kEpochsDepth;
  cfg.hyper.epochs_pretext = kEpochsPretext;
  cfg.hyper.epochs_normals = kEpochsNormals;
  return cfg;
}

ExperimentConfig tiny_config() {
  ExperimentConfig cfg;
  cfg.seed = 11;
  cfg.n_scenes = 3;
  cfg.split_train = 1;
  cfg.split_val = 1;
  cfg.split_test = 1;
  cfg.scene.room_min_x = 3.0;
  cfg.scene.room_max_x = 4.0;
  cfg.scene.room_min_y = 3.0;
  cfg.scene.room_max_y = 4.0;
  cfg.scene.obstacles_min = 0;
  cfg.scene.obstacles_max = 1;
  cfg.grid = {1.5, 0.5, 1.5};
  cfg.camera = {90.0, 16, 16, 10.0};
  cfg.echo.max_order = 1;
  cfg.model.image_size = 16;
  cfg.model.vis_widths = {4, 8, 8, 16};
  cfg.model.audio_widths = {4, 8, 8, 16};
  cfg.model.fusion_dim = 16;
  cfg.hyper.batch = 4;
  cfg.hyper.transfer_seeds = {1};
  return cfg;
}

std::string fmt(double v) {
  std::ostringstream o;
  o.precision(4);
  o << v;
  return o.str();
}

json experiment_summary(const std::string& name, const Dataset& data,
                        const ExperimentConfig& cfg, const fs::path& root) {
  fs::path summary_file = root / name / "summary.json";
  if (fs::exists(summary_file)) {
    std::ifstream f(summary_file);
    return json::parse(f);
  }
  return json::parse(run_experiment(name, data, cfg, root));
}

// ---- criteria 1-5: trained orderings ------------------------------------

Criterion criterion_case_study(const json& s) {
  double avg = s["conditions"]["average"]["mean"]["rms"];
  double echo = s["conditions"]["echo2depth"]["mean"]["rms"];
  double rgb = s["conditions"]["rgb2depth"]["mean"]["rms"];
  double both = s["conditions"]["rgbecho2depth"]["mean"]["rms"];
  auto gap = [](double better, double worse) {
    return (worse - better) / worse;
  };
  bool pass = gap(both, rgb) > 0.02 && gap(rgb, echo) > 0.02 &&
              gap(echo, avg) > 0.02;
  std::string detail = "test RMS rgb+echo " + fmt(both) + " < rgb " +
                       fmt(rgb) + " < echo " + fmt(echo) + " < average " +
                       fmt(avg) + ", gaps " + fmt(gap(both, rgb) * 100) +
                       "% / " + fmt(gap(rgb, echo) * 100) + "% / " +
                       fmt(gap(echo, avg) * 100) + "% (need > 2%)";
  return {1, "case-study depth ordering over 3 seeds", pass, detail};
}

Criterion criterion_pretext(const json& s) {
  double acc = s["test_accuracy"];
  return {2, "pretext accuracy beats chance",
          acc > 0.40,
          "test accuracy " + fmt(acc) + " (need > 0.40, chance 0.25)"};
}

Criterion criterion_transfer_depth(const json& s) {
  double scratch = s["conditions"]["scratch"]["mean"]["rms"];
  double ve = s["conditions"]["visualechoes"]["mean"]["rms"];
  double gain = (scratch - ve) / scratch;
  return {3, "pretext transfer improves depth RMS",
          gain >= 0.02,
          "scratch RMS " + fmt(scratch) + " vs pretrained " + fmt(ve) +
              ", gain " + fmt(gain * 100) + "% (need >= 2%)"};
}

Criterion criterion_ablations(const json& s) {
  double ve = s["conditions"]["visualechoes"]["mean"]["rms"];
  double simple = s["conditions"]["simple_visualechoes"]["mean"]["rms"];
  double binary = s["conditions"]["binary_matching"]["mean"]["rms"];
  bool pass = ve <= simple && ve <= binary;
  return {4, "4-way pretext beats both ablations", pass,
          "RMS full " + fmt(ve) + " vs simple " + fmt(simple) + " vs binary " +
              fmt(binary) + " (need full <= both)"};
}

Criterion criterion_transfer_normals(const json& s) {
  double scratch = s["conditions"]["scratch"]["mean"]["mean_deg"];
  double ve = s["conditions"]["visualechoes"]["mean"]["mean_deg"];
  double gain = (scratch - ve) / scratch;
  return {5, "pretext transfer improves normal estimation",
          gain >= 0.02,
          "scratch mean angle " + fmt(scratch) + " deg vs pretrained " +
              fmt(ve) + " deg, gain " + fmt(gain * 100) + "% (need >= 2%)"};
}

// ---- criterion 6: acoustics oracles --------------------------------------

Criterion criterion_acoustics() {
  std::ostringstream why;
  bool pass = true;

  auto room = [](double lx, double ly, double lz, double beta) {
    Scene s;
    s.extents = {lx, ly, lz};
    for (int i = 0; i < 6; ++i) {
      s.wall_materials[i].id = i;
      s.wall_materials[i].reflection = beta;
    }
    return s;
  };

  // single-wall echo delay, 20 random cases, +-1 sample
  Pcg32 rng(777);
  ListenerModel lm;
  const double sr = 44100;
  for (int trial = 0; trial < 20 && pass; ++trial) {
    double lx = rng.uniform(3.0, 8.0);
    double d = rng.uniform(0.8, lx / 2 - 0.2);
    Scene s = room(lx, rng.uniform(3.0, 8.0), rng.uniform(2.6, 3.4), 0.0);
    s.wall_materials[1].reflection = 0.9;
    AgentPose pose{{lx - d, s.extents.y / 2, s.extents.z / 2},
                   Orientation::Deg0};
    auto arrivals = compute_image_sources(s, pose.position, pose, lm, 1);
    std::vector<ImageSourceArrival> echo;
    for (const auto& a : arrivals)
      if (a.order == 1 && a.amplitude > 0) echo.push_back(a);
    if (echo.size() != 1) {
      pass = false;
      why << "expected one reflective arrival; ";
      break;
    }
    int len = static_cast<int>(sr * 0.1);
    auto rir = synthesize_binaural_rir(echo, pose, lm, sr, len);
    int peak = 0;
    for (int i = 1; i < len; ++i)
      if (std::abs(rir.left[i]) > std::abs(rir.left[peak])) peak = i;
    if (std::abs(peak - 2.0 * d / kSpeedOfSound * sr) > 1.0) {
      pass = false;
      why << "delay off at d=" << d << "; ";
    }
  }

  // free-field analytic impulse to 1e-6
  {
    Scene s = room(10, 10, 10, 0.0);
    AgentPose pose{{3, 5, 5}, Orientation::Deg0};
    Vec3 source{6.2, 5.7, 5.1};
    auto arrivals = compute_image_sources(s, source, pose, lm, 0);
    auto rir = synthesize_binaural_rir(arrivals, pose, lm, sr, 4096);
    Vec3 lateral = right_of(pose.orientation);
    for (int side = 0; side < 2; ++side) {
      Vec3 ear = pose.position +
                 lateral * (side == 0 ? -lm.head_radius : lm.head_radius);
      Vec3 to_src = source - ear;
      double r = std::max(to_src.norm(), lm.head_radius);
      Vec3 outward = side == 0 ? -lateral : lateral;
      double cosphi = to_src.normalized().dot(outward);
      double shadow =
          lm.shadow_floor + (1 - lm.shadow_floor) * (1 + cosphi) / 2;
      const auto& ch = side == 0 ? rir.left : rir.right;
      double total = 0;
      int first = -1;
      for (int i = 0; i < 4096; ++i) {
        total += ch[i];
        if (first < 0 && std::abs(ch[i]) > 0) first = i;
      }
      if (std::abs(total - shadow / r) > 1e-6 ||
          std::abs(first - r / kSpeedOfSound * sr) > 1.0) {
        pass = false;
        why << "free-field impulse mismatch; ";
      }
    }
  }

  // order-1 empty shoebox arrival count
  {
    Scene s = room(4, 5, 3, 0.8);
    AgentPose pose{{2, 2.5, 1.5}, Orientation::Deg0};
    auto arrivals = compute_image_sources(s, pose.position, pose, lm, 1);
    if (arrivals.size() != 7) {
      pass = false;
      why << "order-1 arrival count " << arrivals.size() << " != 7; ";
    }
  }

  // reflection energy monotone in beta
  {
    AgentPose pose{{1.7, 2.4, 1.5}, Orientation::Deg90};
    auto energy = [&](double beta) {
      Scene s = room(4.4, 5.2, 3.0, beta);
      auto arrivals = compute_image_sources(s, pose.position, pose, lm, 2);
      std::vector<ImageSourceArrival> refl;
      for (const auto& a : arrivals)
        if (a.order >= 1) refl.push_back(a);
      auto rir = synthesize_binaural_rir(refl, pose, lm, sr, 4096);
      double e = 0;
      for (double v : rir.left) e += v * v;
      for (double v : rir.right) e += v * v;
      return e;
    };
    double prev = -1;
    for (double beta : {0.0, 0.2, 0.45, 0.7, 0.95}) {
      double e = energy(beta);
      if (e < prev - 1e-12) {
        pass = false;
        why << "energy not monotone in beta; ";
      }
      prev = e;
    }
  }

  return {6, "acoustics oracle suite", pass,
          pass ? "delay/free-field/count/energy oracles hold" : why.str()};
}

// ---- criterion 7: DSP oracles ---------------------------------------------

Criterion criterion_dsp() {
  std::ostringstream why;
  bool pass = true;
  using cd = std::complex<double>;
  Pcg32 rng(778);

  for (size_t n : {2, 4, 8, 16, 32, 64}) {
    std::vector<cd> x(n);
    for (auto& v : x) v = cd{rng.normal(), rng.normal()};
    std::vector<cd> ref(n);
    for (size_t k = 0; k < n; ++k) {
      cd acc{0, 0};
      for (size_t t = 0; t < n; ++t) {
        double ang = -2.0 * M_PI * static_cast<double>(k * t) / n;
        acc += x[t] * cd{std::cos(ang), std::sin(ang)};
      }
      ref[k] = acc;
    }
    auto got = x;
    fft(got);
    for (size_t k = 0; k < n; ++k)
      if (std::abs(got[k] - ref[k]) > 1e-10) {
        pass = false;
        why << "fft vs dft mismatch at n=" << n << "; ";
        break;
      }
    // Parseval
    double te = 0, fe = 0;
    for (const auto& v : x) te += std::norm(v);
    for (const auto& v : got) fe += std::norm(v);
    if (std::abs(te - fe / n) / te > 1e-9) {
      pass = false;
      why << "Parseval violated at n=" << n << "; ";
    }
  }

  if (stft_frames(2646, 64, 16) != 162) {
    pass = false;
    why << "frame formula broken; ";
  }
  for (int n = 64; n <= 300; n += 13)
    for (int hop : {1, 5, 16}) {
      int count = 0;
      for (int start = 0; start + 64 <= n; start += hop) ++count;
      if (stft_frames(n, 64, hop) != count) {
        pass = false;
        why << "frame formula broken at n=" << n << "; ";
      }
    }

  return {7, "DSP oracle suite", pass,
          pass ? "fft=dft to 1e-10, Parseval to 1e-9, frame formula exact"
               : why.str()};
}

// ---- criterion 8: autodiff suite -------------------------------------------

Criterion criterion_autodiff() {
  std::ostringstream why;
  bool pass = true;

  auto checks = run_gradchecks(5, 1e-4);
  double worst = 0;
  for (const auto& r : checks) {
    worst = std::max(worst, r.max_err);
    if (!r.ok) {
      pass = false;
      why << "gradcheck " << r.name << " err " << r.max_err << "; ";
    }
  }

  // conv against a direct-loop oracle to 1e-5
  {
    Pcg32 rng(779);
    TensorF x({2, 3, 8, 8}), w({4, 3, 3, 3}), b({4});
    for (auto& v : x.data) v = static_cast<float>(rng.normal());
    for (auto& v : w.data) v = static_cast<float>(rng.normal());
    for (auto& v : b.data) v = static_cast<float>(rng.normal());
    auto y = conv2d(make_leaf(x, false), make_leaf(w, false),
                    make_leaf(b, false), 1, 1);
    for (int n = 0; n < 2 && pass; ++n)
      for (int oc = 0; oc < 4 && pass; ++oc)
        for (int oh = 0; oh < 8 && pass; ++oh)
          for (int ow = 0; ow < 8 && pass; ++ow) {
            double acc = b.data[oc];
            for (int c = 0; c < 3; ++c)
              for (int ki = 0; ki < 3; ++ki)
                for (int kj = 0; kj < 3; ++kj) {
                  int ih = oh - 1 + ki, iw = ow - 1 + kj;
                  if (ih < 0 || ih >= 8 || iw < 0 || iw >= 8) continue;
                  acc += static_cast<double>(x.at4(n, c, ih, iw)) *
                         w.data[((oc * 3 + c) * 3 + ki) * 3 + kj];
                }
            if (std::abs(y->value.at4(n, oc, oh, ow) - acc) > 1e-5) {
              pass = false;
              why << "conv oracle mismatch; ";
            }
          }
  }

  // one-sample overfit: normalized depth L1 below 0.01 within 2k steps
  double final_loss = 1.0;
  {
    ModelConfig cfg;
    cfg.image_size = 32;
    cfg.vis_widths = {8, 16, 32, 64};
    Model model(ModelKind::Rgb2Depth, cfg, 1);
    Pcg32 rng(780);
    TensorF rgb({1, 3, 32, 32});
    for (auto& v : rgb.data) v = static_cast<float>(rng.uniform());
    TensorF target({1, 1, 32, 32});
    for (int i = 0; i < 32; ++i)
      for (int j = 0; j < 32; ++j)
        target.at4(0, 0, i, j) =
            static_cast<float>(2.0 + 4.0 * i / 31.0 + 2.0 * j / 31.0);
    Adam<float> adam;
    for (int step = 0; step < 2000 && final_loss >= 0.01; ++step) {
      model.params().zero_grads();
      auto pred = model.forward_depth(rgb, nullptr);
      auto loss = scale(l1_loss(pred, target), 1.0f / cfg.max_depth);
      backward(loss);
      adam.step(model.params());
      final_loss = loss->value[0];
    }
    if (final_loss >= 0.01) {
      pass = false;
      why << "overfit stalled at L1 " << final_loss << "; ";
    }
  }

  std::ostringstream ok;
  ok.precision(3);
  ok << "worst gradcheck err " << worst
     << ", conv oracle to 1e-5, overfit L1 " << final_loss;
  return {8, "autodiff suite", pass, pass ? ok.str() : why.str()};
}

// ---- criterion 9: metric fixtures ------------------------------------------

Criterion criterion_metrics() {
  std::ostringstream why;
  bool pass = true;
  auto expect = [&](bool cond, const std::string& what) {
    if (!cond) {
      pass = false;
      why << what << "; ";
    }
  };

  Pcg32 rng(781);
  DepthMap gt;
  gt.height = gt.width = 4;
  gt.data.resize(16);
  for (auto& v : gt.data) v = static_cast<float>(rng.uniform(1.0, 5.0));

  auto id = depth_metrics({gt}, {gt});
  expect(id.rms == 0 && id.rel == 0 && id.log10 == 0 && id.delta1 == 1 &&
             id.delta2 == 1 && id.delta3 == 1,
         "identity depth fixture");

  DepthMap scaled = gt;
  for (auto& v : scaled.data) v *= 1.3f;
  auto sc = depth_metrics({scaled}, {gt});
  expect(std::abs(sc.rel - 0.3) < 1e-6 && sc.delta1 == 0 && sc.delta2 == 1 &&
             sc.delta3 == 1,
         "1.3x scaling fixture");

  DepthMap pred;
  pred.height = pred.width = 4;
  pred.data.resize(16);
  for (auto& v : pred.data) v = static_cast<float>(rng.uniform(1.0, 5.0));
  auto got = depth_metrics({pred}, {gt});
  double se = 0, rel = 0, l10 = 0, d1 = 0, d2 = 0, d3 = 0;
  for (int i = 0; i < 16; ++i) {
    double p = pred.data[i], g = gt.data[i];
    se += (p - g) * (p - g);
    rel += std::abs(p - g) / g;
    l10 += std::abs(std::log10(p) - std::log10(g));
    double r = std::max(p / g, g / p);
    d1 += r < 1.25;
    d2 += r < 1.5625;
    d3 += r < 1.953125;
  }
  expect(std::abs(got.rms - std::sqrt(se / 16)) < 1e-7 &&
             std::abs(got.rel - rel / 16) < 1e-7 &&
             std::abs(got.log10 - l10 / 16) < 1e-7 &&
             got.delta1 == d1 / 16 && got.delta2 == d2 / 16 &&
             got.delta3 == d3 / 16,
         "random depth fixture vs scalar oracle");

  NormalMap n1;
  n1.height = n1.width = 4;
  n1.valid.assign(16, 1);
  n1.data.resize(48);
  NormalMap n2 = n1;
  const double ang = 20.0 * M_PI / 180.0;
  for (int p = 0; p < 16; ++p) {
    n1.data[p * 3 + 0] = 0;
    n1.data[p * 3 + 1] = 0;
    n1.data[p * 3 + 2] = 1;
    n2.data[p * 3 + 0] = static_cast<float>(std::sin(ang));
    n2.data[p * 3 + 1] = 0;
    n2.data[p * 3 + 2] = static_cast<float>(std::cos(ang));
  }
  auto nid = normal_metrics({n1}, {n1});
  expect(nid.mean_deg == 0 && nid.median_deg == 0 && nid.pct_11 == 1 &&
             nid.pct_22 == 1 && nid.pct_30 == 1,
         "identity normal fixture");
  auto rot = normal_metrics({n2}, {n1});
  expect(std::abs(rot.mean_deg - 20.0) < 1e-4 &&
             std::abs(rot.median_deg - 20.0) < 1e-4 && rot.pct_11 == 0 &&
             rot.pct_22 == 1 && rot.pct_30 == 1,
         "20-degree rotation fixture");

  std::vector<std::vector<float>> logits = {
      {2, 1}, {0, 1}, {5, 4}, {1, 3}, {2, 2},
      {0, 7}, {9, 1}, {1, 2}, {3, 0}, {0, 1}};
  std::vector<int> labels = {0, 1, 1, 1, 0, 1, 0, 0, 1, 1};
  expect(std::abs(classification_accuracy(logits, labels) - 0.7) < 1e-12,
         "hand-counted accuracy fixture");

  return {9, "metric fixtures", pass,
          pass ? "depth, normal, and accuracy fixtures match scalar oracles"
               : why.str()};
}

// ---- criterion 10: determinism ---------------------------------------------

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

Criterion criterion_determinism(const fs::path& work) {
  std::ostringstream why;
  bool pass = true;
  auto cfg = tiny_config();

  fs::path d1 = work / "det_data_1", d2 = work / "det_data_2";
  fs::remove_all(d1);
  fs::remove_all(d2);
  gen_dataset(cfg, d1);
  gen_dataset(cfg, d2);
  size_t compared = 0;
  for (const auto& entry : fs::recursive_directory_iterator(d1)) {
    if (!entry.is_regular_file()) continue;
    auto rel = fs::relative(entry.path(), d1);
    if (!fs::exists(d2 / rel) || slurp(entry.path()) != slurp(d2 / rel)) {
      pass = false;
      why << "dataset file differs: " << rel.string() << "; ";
    }
    ++compared;
  }
  if (compared < 10) {
    pass = false;
    why << "dataset too small to compare; ";
  }

  Dataset data(d1);
  TrainOptions opt;
  opt.kind = ModelKind::Pretext;
  opt.seed = 3;
  opt.epochs = 2;
  opt.batch = 4;
  opt.quiet = true;
  auto r1 = train_model(data, cfg.model, opt, work / "det_run_1");
  auto r2 = train_model(data, cfg.model, opt, work / "det_run_2");
  if (slurp(r1.checkpoint) != slurp(r2.checkpoint)) {
    pass = false;
    why << "checkpoints differ across identical runs; ";
  }

  return {10, "byte-identical regeneration and retraining", pass,
          pass ? std::to_string(compared) +
                     " dataset files and final checkpoints identical"
               : why.str()};
}

}  // namespace

int main(int argc, char** argv) {
  fs::path work = "acceptance_work";
  bool fast_only = false;
  for (int i = 1; i < argc; ++i) {
    std::string arg = argv[i];
    if (arg == "--work-dir" && i + 1 < argc)
      work = argv[++i];
    else if (arg == "--fast-only")
      fast_only = true;
  }
  fs::create_directories(work);

  std::vector<Criterion> results;
  try {
    if (!fast_only) {
      auto cfg = desk_config();
      fs::path data_dir = work / "dataset";
      if (!fs::exists(data_dir / "manifest.jsonl")) {
        std::cerr << "[acceptance] generating desk dataset...\n";
        gen_dataset(cfg, data_dir);
      }
      Dataset data(data_dir);
      std::cerr << "[acceptance] running experiments (this trains "
                   "models; expect a few CPU-hours)...\n";
      auto pretext = experiment_summary("pretext", data, cfg, work);
      auto case_study = experiment_summary("case_study", data, cfg, work);
      auto transfer_d = experiment_summary("transfer_depth", data, cfg, work);
      auto transfer_n = experiment_summary("transfer_normals", data, cfg, work);
      auto ablations = experiment_summary("ablations", data, cfg, work);
      results.push_back(criterion_case_study(case_study));
      results.push_back(criterion_pretext(pretext));
      results.push_back(criterion_transfer_depth(transfer_d));
      results.push_back(criterion_ablations(ablations));
      results.push_back(criterion_transfer_normals(transfer_n));
    }
    results.push_back(criterion_acoustics());
    results.push_back(criterion_dsp());
    results.push_back(criterion_autodiff());
    results.push_back(criterion_metrics());
    results.push_back(criterion_determinism(work));
  } catch (const std::exception& e) {
    std::cerr << "acceptance aborted: " << e.what() << "\n";
    return 2;
  }

  bool all = true;
  for (const auto& c : results) {
    std::cout << (c.pass ? "PASS" : "FAIL") << " criterion " << c.id << " ("
              << c.name << "): " << c.detail << "\n";
    all = all && c.pass;
  }
  std::cout << (all ? "ALL CRITERIA PASSED" : "SOME CRITERIA FAILED") << "\n";
  return all ? 0 : 1;
}
