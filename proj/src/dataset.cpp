#include "ve/dataset.hpp"

#include <cmath>
#include <fstream>

#include "json.hpp"

namespace ve {

namespace fs = std::filesystem;

DatasetSplit split_scenes(const std::vector<std::string>& scene_ids,
                          int n_train, int n_val, int n_test, uint64_t seed) {
  if (n_train + n_val + n_test > static_cast<int>(scene_ids.size()))
    throw ConfigError("split sizes exceed available scenes");
  std::vector<std::string> ids = scene_ids;
  Pcg32 rng(seed, 0x5851f42d4c957f2dULL);
  rng.shuffle(ids);
  DatasetSplit split;
  split.seed = seed;
  split.train.assign(ids.begin(), ids.begin() + n_train);
  split.val.assign(ids.begin() + n_train, ids.begin() + n_train + n_val);
  split.test.assign(ids.begin() + n_train + n_val,
                    ids.begin() + n_train + n_val + n_test);
  for (auto* part : {&split.train, &split.val, &split.test})
    std::sort(part->begin(), part->end());
  return split;
}

namespace {

std::string scene_name(int idx) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "scene_%03d", idx);
  return buf;
}

TensorF rgb_to_tensor(const RGBImage& img) {
  TensorF t({3, img.height, img.width});
  for (int c = 0; c < 3; ++c)
    for (int i = 0; i < img.height; ++i)
      for (int j = 0; j < img.width; ++j)
        t.data[(static_cast<size_t>(c) * img.height + i) * img.width + j] =
            img.at(i, j, c);
  return t;
}

TensorF depth_to_tensor(const DepthMap& d) {
  TensorF t({1, d.height, d.width});
  t.data = d.data;
  return t;
}

TensorF normal_to_tensor(const NormalMap& n) {
  TensorF t({4, n.height, n.width});
  const size_t plane = static_cast<size_t>(n.height) * n.width;
  for (int c = 0; c < 3; ++c)
    for (size_t p = 0; p < plane; ++p)
      t.data[c * plane + p] = n.data[p * 3 + c];
  for (size_t p = 0; p < plane; ++p)
    t.data[3 * plane + p] = n.valid[p] ? 1.0f : 0.0f;
  return t;
}

TensorF echo_to_tensor(const BinauralWaveform& w) {
  const int n = static_cast<int>(w.left.size());
  TensorF t({2, n});
  for (int i = 0; i < n; ++i) {
    t.data[i] = static_cast<float>(w.left[i]);
    t.data[n + i] = static_cast<float>(w.right[i]);
  }
  return t;
}

TensorF spec_to_tensor(const Spectrogram& s) {
  TensorF t({2, s.freq_bins, s.time_frames});
  t.data = s.values;
  return t;
}

}  // namespace

std::string record_to_json(const DatasetRecord& rec) {
  nlohmann::json views;
  for (int k = 0; k < 4; ++k) {
    const auto& v = rec.views[k];
    views[std::to_string(k * 90)] = {{"rgb", v.rgb},
                                     {"depth", v.depth},
                                     {"normal", v.normal},
                                     {"echo", v.echo},
                                     {"spec", v.spec}};
  }
  nlohmann::json j = {
      {"scene", rec.scene_id}, {"position", rec.position}, {"views", views}};
  return j.dump();
}

DatasetRecord record_from_json(const std::string& line) {
  nlohmann::json j = nlohmann::json::parse(line);
  DatasetRecord rec;
  rec.scene_id = j.at("scene").get<std::string>();
  rec.position = j.at("position").get<int>();
  for (int k = 0; k < 4; ++k) {
    const auto& v = j.at("views").at(std::to_string(k * 90));
    rec.views[k] = {v.at("rgb").get<std::string>(),
                    v.at("depth").get<std::string>(),
                    v.at("normal").get<std::string>(),
                    v.at("echo").get<std::string>(),
                    v.at("spec").get<std::string>()};
  }
  return rec;
}

void gen_dataset(const ExperimentConfig& cfg, const fs::path& out_dir) {
  cfg.validate();
  fs::create_directories(out_dir / "blobs");
  fs::create_directories(out_dir / "scenes");

  {
    std::ofstream f(out_dir / "config.toml");
    if (!f) throw IoError("cannot write to " + out_dir.string());
    f << cfg.to_toml();
  }

  Waveform chirp = make_chirp(cfg.echo.chirp_f0, cfg.echo.chirp_f1,
                              cfg.echo.chirp_duration, cfg.echo.sample_rate);

  Pcg32 seed_rng(cfg.seed, 0x853c49e6748fea9bULL);
  std::vector<uint64_t> scene_seeds;
  for (int s = 0; s < cfg.n_scenes; ++s)
    scene_seeds.push_back((static_cast<uint64_t>(seed_rng.next_u32()) << 32) |
                          seed_rng.next_u32());

  std::vector<std::string> scene_ids;
  std::vector<DatasetRecord> records;

  for (int s = 0; s < cfg.n_scenes; ++s) {
    const std::string sid = scene_name(s);
    scene_ids.push_back(sid);
    Scene scene = generate_scene(scene_seeds[s], cfg.scene);
    {
      std::ofstream f(out_dir / "scenes" / (sid + ".json"));
      f << scene_to_json(scene);
    }
    fs::create_directories(out_dir / "blobs" / sid);

    auto poses = navigable_poses(scene, cfg.grid);
    const int n_positions = static_cast<int>(poses.size()) / 4;
    for (int p = 0; p < n_positions; ++p) {
      DatasetRecord rec;
      rec.scene_id = sid;
      rec.position = p;
      for (int k = 0; k < 4; ++k) {
        const AgentPose& pose = poses[p * 4 + k];
        char stem[64];
        std::snprintf(stem, sizeof(stem), "p%03d_o%03d", p, k * 90);
        const std::string base = "blobs/" + sid + "/" + stem;

        auto [rgb, depth] = render_rgbd(scene, pose, cfg.camera);
        NormalMap normals = depth_to_normals(depth, cfg.camera);
        BinauralWaveform echo = simulate_echo(scene, pose, chirp,
                                              cfg.echo.clip_duration,
                                              cfg.echo.max_order,
                                              cfg.echo.listener);
        Spectrogram spec =
            stft_log_magnitude(echo, cfg.stft.win, cfg.stft.hop, cfg.stft.nfft);

        ViewRefs refs{base + ".rgb.vets", base + ".depth.vets",
                      base + ".normal.vets", base + ".echo.vets",
                      base + ".spec.vets"};
        write_blob(out_dir / refs.rgb, rgb_to_tensor(rgb));
        write_blob(out_dir / refs.depth, depth_to_tensor(depth));
        write_blob(out_dir / refs.normal, normal_to_tensor(normals));
        write_blob(out_dir / refs.echo, echo_to_tensor(echo));
        write_blob(out_dir / refs.spec, spec_to_tensor(spec));
        rec.views[k] = refs;
      }
      records.push_back(rec);
    }
  }

  {
    std::ofstream f(out_dir / "manifest.jsonl");
    for (const auto& rec : records) f << record_to_json(rec) << "\n";
  }

  DatasetSplit split = split_scenes(scene_ids, cfg.split_train, cfg.split_val,
                                    cfg.split_test, cfg.seed);
  {
    nlohmann::json j = {{"seed", split.seed},
                        {"train", split.train},
                        {"val", split.val},
                        {"test", split.test}};
    std::ofstream f(out_dir / "split.json");
    f << j.dump(2);
  }

  // Per-channel spectrogram statistics over the train split only.
  std::set<std::string> train_set(split.train.begin(), split.train.end());
  std::array<double, 2> sum = {0, 0}, sumsq = {0, 0};
  size_t n_vals = 0;
  for (const auto& rec : records) {
    if (!train_set.count(rec.scene_id)) continue;
    for (int k = 0; k < 4; ++k) {
      TensorF spec = read_blob(out_dir / rec.views[k].spec);
      const size_t plane = spec.numel() / 2;
      for (int c = 0; c < 2; ++c)
        for (size_t i = 0; i < plane; ++i) {
          double v = spec.data[c * plane + i];
          sum[c] += v;
          sumsq[c] += v * v;
        }
      n_vals += plane;
    }
  }
  if (n_vals == 0) throw ConfigError("dataset has no training records");
  nlohmann::json stats;
  for (int c = 0; c < 2; ++c) {
    double mean = sum[c] / n_vals;
    double var = std::max(sumsq[c] / n_vals - mean * mean, 1e-12);
    stats["mean"].push_back(mean);
    stats["stddev"].push_back(std::sqrt(var));
  }
  std::ofstream f(out_dir / "stats.json");
  f << stats.dump(2);
}

Dataset::Dataset(const fs::path& root) : root_(root) {
  cfg_ = ExperimentConfig::from_file(root / "config.toml");

  std::ifstream mf(root / "manifest.jsonl");
  if (!mf) throw IoError("cannot open manifest in " + root.string());
  std::string line;
  while (std::getline(mf, line)) {
    if (!line.empty()) records_.push_back(record_from_json(line));
  }

  std::ifstream sf(root / "split.json");
  if (!sf) throw IoError("cannot open split.json in " + root.string());
  nlohmann::json js = nlohmann::json::parse(sf);
  split_.seed = js.at("seed").get<uint64_t>();
  split_.train = js.at("train").get<std::vector<std::string>>();
  split_.val = js.at("val").get<std::vector<std::string>>();
  split_.test = js.at("test").get<std::vector<std::string>>();

  std::ifstream stf(root / "stats.json");
  if (!stf) throw IoError("cannot open stats.json in " + root.string());
  nlohmann::json jt = nlohmann::json::parse(stf);
  for (int c = 0; c < 2; ++c) {
    stats_.mean[c] = jt.at("mean").at(c).get<double>();
    stats_.stddev[c] = jt.at("stddev").at(c).get<double>();
  }
}

std::vector<size_t> Dataset::split_records(const std::string& split) const {
  const std::vector<std::string>* ids = nullptr;
  if (split == "train") ids = &split_.train;
  else if (split == "val") ids = &split_.val;
  else if (split == "test") ids = &split_.test;
  else throw std::invalid_argument("unknown split: " + split);
  std::set<std::string> want(ids->begin(), ids->end());
  std::vector<size_t> out;
  for (size_t i = 0; i < records_.size(); ++i)
    if (want.count(records_[i].scene_id)) out.push_back(i);
  return out;
}

TensorF Dataset::read(const std::string& rel) const {
  accessed_.insert(rel);
  return read_blob(root_ / rel);
}

TensorF Dataset::load_rgb(size_t record, int orient_idx) const {
  return read(records_.at(record).views.at(orient_idx).rgb);
}

TensorF Dataset::load_depth(size_t record, int orient_idx) const {
  return read(records_.at(record).views.at(orient_idx).depth);
}

TensorF Dataset::load_normal(size_t record, int orient_idx) const {
  return read(records_.at(record).views.at(orient_idx).normal);
}

TensorF Dataset::load_spectrogram(size_t record, int orient_idx) const {
  TensorF t = read(records_.at(record).views.at(orient_idx).spec);
  const size_t plane = t.numel() / 2;
  for (int c = 0; c < 2; ++c) {
    float mean = static_cast<float>(stats_.mean[c]);
    float inv = static_cast<float>(1.0 / stats_.stddev[c]);
    for (size_t i = 0; i < plane; ++i)
      t.data[c * plane + i] = (t.data[c * plane + i] - mean) * inv;
  }
  return t;
}

DepthMap Dataset::load_depth_map(size_t record, int orient_idx) const {
  TensorF t = read(records_.at(record).views.at(orient_idx).depth);
  DepthMap d;
  d.height = t.dim(1);
  d.width = t.dim(2);
  d.data = t.data;
  return d;
}

NormalMap Dataset::load_normal_map(size_t record, int orient_idx) const {
  TensorF t = read(records_.at(record).views.at(orient_idx).normal);
  NormalMap n;
  n.height = t.dim(1);
  n.width = t.dim(2);
  const size_t plane = static_cast<size_t>(n.height) * n.width;
  n.data.resize(plane * 3);
  n.valid.resize(plane);
  for (size_t p = 0; p < plane; ++p) {
    for (int c = 0; c < 3; ++c) n.data[p * 3 + c] = t.data[c * plane + p];
    n.valid[p] = t.data[3 * plane + p] > 0.5f ? 1 : 0;
  }
  return n;
}

}  // namespace ve
