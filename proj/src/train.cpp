#include "ve/train.hpp"

#include <algorithm>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <tuple>

#include "json.hpp"

namespace ve {

namespace fs = std::filesystem;

namespace {

struct SampleRef {
  size_t record;
  int orient;  // view orientation index 0..3
};

std::vector<SampleRef> enumerate_samples(const Dataset& data,
                                         const std::string& split) {
  std::vector<SampleRef> out;
  for (size_t r : data.split_records(split))
    for (int k = 0; k < 4; ++k) out.push_back({r, k});
  return out;
}

bool is_classifier(ModelKind kind) {
  return kind == ModelKind::Pretext || kind == ModelKind::PretextSimple ||
         kind == ModelKind::BinaryMatch;
}

bool needs_audio(ModelKind kind) {
  return kind != ModelKind::Rgb2Depth && kind != ModelKind::Normals;
}

bool needs_rgb(ModelKind kind) { return kind != ModelKind::Echo2Depth; }

TensorF stack(const std::vector<TensorF>& parts) {
  std::vector<int> shape = parts.at(0).shape;
  shape.insert(shape.begin(), static_cast<int>(parts.size()));
  TensorF out(shape);
  size_t stride = parts[0].numel();
  for (size_t i = 0; i < parts.size(); ++i) {
    if (parts[i].numel() != stride)
      throw ShapeError("stack: ragged batch");
    std::copy(parts[i].data.begin(), parts[i].data.end(),
              out.data.begin() + i * stride);
  }
  return out;
}

// Classification sample: which echo orientation to pair with the view,
// the class label, and (for binary matching) an optional foreign record.
struct ClassSample {
  size_t record;
  int view_orient;
  int echo_orient;
  size_t echo_record;
  int label;
};

ClassSample make_class_sample(ModelKind kind, const Dataset& data,
                              const std::vector<size_t>& split_records,
                              const SampleRef& ref, uint32_t draw_a,
                              uint32_t draw_b) {
  ClassSample s;
  s.record = ref.record;
  s.view_orient = ref.orient;
  s.echo_record = ref.record;
  switch (kind) {
    case ModelKind::Pretext: {
      int offset = static_cast<int>(draw_a % 4);
      s.echo_orient = (ref.orient + offset) % 4;
      s.label = offset;
      break;
    }
    case ModelKind::PretextSimple: {
      // two classes over offsets {Same, Opposite}
      int offset = (draw_a % 2) * 2;
      s.echo_orient = (ref.orient + offset) % 4;
      s.label = offset / 2;
      break;
    }
    case ModelKind::BinaryMatch: {
      // label 1: echo from this pose; label 0: random pose of another scene
      bool same = (draw_a % 2) == 0;
      s.echo_orient = ref.orient;
      s.label = same ? 1 : 0;
      if (!same) {
        const std::string& own = data.records()[ref.record].scene_id;
        size_t pick = split_records.at(draw_b % split_records.size());
        for (size_t tries = 0;
             data.records()[pick].scene_id == own && tries < split_records.size();
             ++tries)
          pick = split_records[(draw_b + tries + 1) % split_records.size()];
        if (data.records()[pick].scene_id == own)
          throw ConfigError("binary matching needs at least two scenes per split");
        s.echo_record = pick;
        s.echo_orient = static_cast<int>(draw_b % 4);
      }
      break;
    }
    default:
      throw std::logic_error("not a classification kind");
  }
  return s;
}

struct ClassBatch {
  TensorF rgb, spec;
  std::vector<int> labels;
};

ClassBatch build_class_batch(const Dataset& data,
                             const std::vector<ClassSample>& samples) {
  std::vector<TensorF> rgbs, specs;
  ClassBatch batch;
  for (const auto& s : samples) {
    rgbs.push_back(data.load_rgb(s.record, s.view_orient));
    specs.push_back(data.load_spectrogram(s.echo_record, s.echo_orient));
    batch.labels.push_back(s.label);
  }
  batch.rgb = stack(rgbs);
  batch.spec = stack(specs);
  return batch;
}

struct DenseBatch {
  TensorF rgb, spec, target;
  std::vector<uint8_t> mask;
};

DenseBatch build_depth_batch(const Dataset& data, ModelKind kind,
                             const std::vector<SampleRef>& samples) {
  std::vector<TensorF> rgbs, specs, targets;
  for (const auto& s : samples) {
    if (needs_rgb(kind)) rgbs.push_back(data.load_rgb(s.record, s.orient));
    if (needs_audio(kind))
      specs.push_back(data.load_spectrogram(s.record, s.orient));
    targets.push_back(data.load_depth(s.record, s.orient));
  }
  DenseBatch b;
  if (!rgbs.empty()) b.rgb = stack(rgbs);
  if (!specs.empty()) b.spec = stack(specs);
  b.target = stack(targets);
  b.mask.resize(b.target.numel());
  for (size_t i = 0; i < b.target.numel(); ++i)
    b.mask[i] = b.target.data[i] > 1e-3f ? 1 : 0;
  return b;
}

DenseBatch build_normals_batch(const Dataset& data,
                               const std::vector<SampleRef>& samples) {
  std::vector<TensorF> rgbs, targets;
  DenseBatch b;
  std::vector<std::vector<uint8_t>> masks;
  for (const auto& s : samples) {
    rgbs.push_back(data.load_rgb(s.record, s.orient));
    TensorF nm = data.load_normal(s.record, s.orient);  // (4,S,S)
    const size_t plane = static_cast<size_t>(nm.dim(1)) * nm.dim(2);
    TensorF t({3, nm.dim(1), nm.dim(2)});
    std::copy_n(nm.data.begin(), 3 * plane, t.data.begin());
    targets.push_back(std::move(t));
    std::vector<uint8_t> m(plane);
    for (size_t p = 0; p < plane; ++p) m[p] = nm.data[3 * plane + p] > 0.5f;
    masks.push_back(std::move(m));
  }
  b.rgb = stack(rgbs);
  b.target = stack(targets);
  for (const auto& m : masks) b.mask.insert(b.mask.end(), m.begin(), m.end());
  return b;
}

NodePtr<float> dense_loss(Model& model, const DenseBatch& batch) {
  if (model.kind() == ModelKind::Normals) {
    auto pred = model.forward_normals(batch.rgb);
    return cosine_loss(pred, batch.target, batch.mask);
  }
  auto pred = model.forward_depth(
      batch.rgb, needs_audio(model.kind()) ? &batch.spec : nullptr);
  // L1 on depth normalized by max_depth
  auto l1 = l1_loss(pred, batch.target, batch.mask);
  return scale(l1, 1.0f / model.config().max_depth);
}

double dense_split_loss(Model& model, const Dataset& data,
                        const std::string& split, int batch_size) {
  auto samples = enumerate_samples(data, split);
  if (samples.empty()) return 0.0;
  double total = 0;
  size_t count = 0;
  for (size_t i = 0; i < samples.size(); i += batch_size) {
    std::vector<SampleRef> chunk(
        samples.begin() + i,
        samples.begin() + std::min(i + batch_size, samples.size()));
    DenseBatch b = model.kind() == ModelKind::Normals
                       ? build_normals_batch(data, chunk)
                       : build_depth_batch(data, model.kind(), chunk);
    auto loss = dense_loss(model, b);
    total += loss->value[0] * chunk.size();
    count += chunk.size();
  }
  return total / static_cast<double>(count);
}

std::vector<ClassSample> eval_class_samples(ModelKind kind, const Dataset& data,
                                            const std::string& split) {
  auto refs = enumerate_samples(data, split);
  auto split_recs = data.split_records(split);
  std::vector<ClassSample> out;
  // Offsets must come from a seeded stream, not from the sample index:
  // refs cycle through view orientations, so an index-derived offset
  // would correlate the label with the view and leak it through the
  // image alone.
  Pcg32 rng(data.split().seed ^ 0x7f4a7c15u, 0xd1342543de82ef95ULL);
  for (size_t i = 0; i < refs.size(); ++i) {
    uint32_t a = rng.next_u32();
    uint32_t b = rng.next_u32();
    out.push_back(make_class_sample(kind, data, split_recs, refs[i], a, b));
  }
  return out;
}

void write_log_csv(const fs::path& path, const std::vector<LogRow>& log) {
  std::ofstream f(path);
  f << "epoch,split,loss,metric\n";
  for (const auto& r : log)
    f << r.epoch << "," << r.split << "," << r.loss << "," << r.metric << "\n";
}

}  // namespace

double eval_classification_model(Model& model, const Dataset& data,
                                 const std::string& split) {
  auto samples = eval_class_samples(model.kind(), data, split);
  if (samples.empty()) throw ConfigError("empty split: " + split);
  std::vector<std::vector<float>> logits;
  std::vector<int> labels;
  const int bs = 16;
  for (size_t i = 0; i < samples.size(); i += bs) {
    std::vector<ClassSample> chunk(
        samples.begin() + i,
        samples.begin() + std::min(i + bs, samples.size()));
    ClassBatch batch = build_class_batch(data, chunk);
    auto out = model.forward_logits(batch.rgb, batch.spec);
    const int k = out->value.dim(1);
    for (size_t n = 0; n < chunk.size(); ++n) {
      logits.emplace_back(out->value.data.begin() + n * k,
                          out->value.data.begin() + (n + 1) * k);
      labels.push_back(batch.labels[n]);
    }
  }
  return classification_accuracy(logits, labels);
}

DepthMetrics eval_depth_model(Model& model, const Dataset& data,
                              const std::string& split) {
  auto samples = enumerate_samples(data, split);
  if (samples.empty()) throw ConfigError("empty split: " + split);
  std::vector<DepthMap> preds, gts;
  const int bs = 16;
  for (size_t i = 0; i < samples.size(); i += bs) {
    std::vector<SampleRef> chunk(
        samples.begin() + i,
        samples.begin() + std::min(i + bs, samples.size()));
    DenseBatch b = build_depth_batch(data, model.kind(), chunk);
    auto pred = model.forward_depth(
        b.rgb, needs_audio(model.kind()) ? &b.spec : nullptr);
    const int h = pred->value.dim(2), w = pred->value.dim(3);
    for (size_t n = 0; n < chunk.size(); ++n) {
      DepthMap p{h, w, std::vector<float>(
                           pred->value.data.begin() + n * h * w,
                           pred->value.data.begin() + (n + 1) * h * w)};
      preds.push_back(std::move(p));
      gts.push_back(data.load_depth_map(chunk[n].record, chunk[n].orient));
    }
  }
  return depth_metrics(preds, gts);
}

NormalMetrics eval_normals_model(Model& model, const Dataset& data,
                                 const std::string& split) {
  auto samples = enumerate_samples(data, split);
  if (samples.empty()) throw ConfigError("empty split: " + split);
  std::vector<NormalMap> preds, gts;
  const int bs = 16;
  for (size_t i = 0; i < samples.size(); i += bs) {
    std::vector<SampleRef> chunk(
        samples.begin() + i,
        samples.begin() + std::min(i + bs, samples.size()));
    DenseBatch b = build_normals_batch(data, chunk);
    auto pred = model.forward_normals(b.rgb);
    const int h = pred->value.dim(2), w = pred->value.dim(3);
    const size_t plane = static_cast<size_t>(h) * w;
    for (size_t n = 0; n < chunk.size(); ++n) {
      NormalMap p;
      p.height = h;
      p.width = w;
      p.data.resize(plane * 3);
      p.valid.assign(plane, 1);
      for (int c = 0; c < 3; ++c)
        for (size_t q = 0; q < plane; ++q)
          p.data[q * 3 + c] = pred->value.data[(n * 3 + c) * plane + q];
      preds.push_back(std::move(p));
      gts.push_back(data.load_normal_map(chunk[n].record, chunk[n].orient));
    }
  }
  return normal_metrics(preds, gts);
}

DepthMetrics eval_average_baseline(const Dataset& data,
                                   const std::string& eval_split) {
  std::vector<DepthMap> train_maps;
  for (const auto& s : enumerate_samples(data, "train"))
    train_maps.push_back(data.load_depth_map(s.record, s.orient));
  DepthMap avg = average_baseline(train_maps);
  std::vector<DepthMap> preds, gts;
  for (const auto& s : enumerate_samples(data, eval_split)) {
    preds.push_back(avg);
    gts.push_back(data.load_depth_map(s.record, s.orient));
  }
  return depth_metrics(preds, gts);
}

TrainResult train_model(const Dataset& data, const ModelConfig& model_cfg,
                        const TrainOptions& opt, const fs::path& out_dir) {
  fs::create_directories(out_dir);
  Model model(opt.kind, model_cfg, opt.seed);
  if (opt.init_checkpoint) model.load_encoder(*opt.init_checkpoint);

  Adam<float> adam({opt.lr, 0.9, 0.999, 1e-8});
  Pcg32 rng(opt.seed, 0xa02bdbf7bb3c0a7ULL);

  auto train_refs = enumerate_samples(data, "train");
  if (train_refs.empty()) throw ConfigError("training split is empty");
  auto train_recs = data.split_records("train");
  const bool classify = is_classifier(opt.kind);

  TrainResult result;
  result.checkpoint = out_dir / "checkpoint.ckpt";
  const bool have_val = !data.split().val.empty();
  // Higher is better for accuracy, lower for the dense validation loss.
  double best_val = classify ? -1.0 : std::numeric_limits<double>::infinity();
  for (int epoch = 1; epoch <= opt.epochs; ++epoch) {
    std::vector<SampleRef> order = train_refs;
    rng.shuffle(order);
    double epoch_loss = 0;
    size_t seen = 0;
    for (size_t i = 0; i < order.size(); i += opt.batch) {
      std::vector<SampleRef> chunk(
          order.begin() + i,
          order.begin() + std::min(i + opt.batch, order.size()));
      model.params().zero_grads();
      NodePtr<float> loss;
      if (classify) {
        std::vector<ClassSample> samples;
        for (const auto& ref : chunk)
          samples.push_back(make_class_sample(opt.kind, data, train_recs, ref,
                                              rng.next_u32(), rng.next_u32()));
        ClassBatch batch = build_class_batch(data, samples);
        auto logits = model.forward_logits(batch.rgb, batch.spec);
        loss = softmax_cross_entropy(logits, batch.labels);
      } else {
        DenseBatch batch = opt.kind == ModelKind::Normals
                               ? build_normals_batch(data, chunk)
                               : build_depth_batch(data, opt.kind, chunk);
        loss = dense_loss(model, batch);
      }
      backward(loss);
      adam.step(model.params());
      epoch_loss += loss->value[0] * chunk.size();
      seen += chunk.size();
    }
    epoch_loss /= static_cast<double>(seen);

    double val_metric = 0;
    if (!data.split().val.empty()) {
      val_metric = classify ? eval_classification_model(model, data, "val")
                            : dense_split_loss(model, data, "val", opt.batch);
    }
    result.log.push_back({epoch, "train", epoch_loss, 0.0});
    result.log.push_back({epoch, "val", 0.0, val_metric});
    if (!opt.quiet)
      std::cerr << "[" << to_string(opt.kind) << " seed " << opt.seed
                << "] epoch " << epoch << " train_loss " << epoch_loss
                << " val " << val_metric << "\n";
    // Keep the checkpoint with the best validation metric.
    if (have_val) {
      const bool improved = classify ? val_metric > best_val : val_metric < best_val;
      if (improved) {
        best_val = val_metric;
        model.save(result.checkpoint);
      }
    }
  }

  if (!have_val) model.save(result.checkpoint);
  write_log_csv(out_dir / "log.csv", result.log);
  return result;
}

// ---- experiments -------------------------------------------------------

namespace {

nlohmann::json depth_metrics_json(const DepthMetrics& m) {
  return {{"rms", m.rms},       {"rel", m.rel},       {"log10", m.log10},
          {"delta1", m.delta1}, {"delta2", m.delta2}, {"delta3", m.delta3},
          {"pixels", m.pixel_count}};
}

nlohmann::json normal_metrics_json(const NormalMetrics& m) {
  return {{"mean_deg", m.mean_deg}, {"median_deg", m.median_deg},
          {"pct_11_25", m.pct_11},  {"pct_22_5", m.pct_22},
          {"pct_30", m.pct_30},     {"pixels", m.pixel_count}};
}

DepthMetrics mean_depth_metrics(const std::vector<DepthMetrics>& ms) {
  DepthMetrics out;
  for (const auto& m : ms) {
    out.rms += m.rms;
    out.rel += m.rel;
    out.log10 += m.log10;
    out.delta1 += m.delta1;
    out.delta2 += m.delta2;
    out.delta3 += m.delta3;
    out.pixel_count += m.pixel_count;
  }
  double n = static_cast<double>(ms.size());
  out.rms /= n;
  out.rel /= n;
  out.log10 /= n;
  out.delta1 /= n;
  out.delta2 /= n;
  out.delta3 /= n;
  return out;
}

NormalMetrics mean_normal_metrics(const std::vector<NormalMetrics>& ms) {
  NormalMetrics out;
  for (const auto& m : ms) {
    out.mean_deg += m.mean_deg;
    out.median_deg += m.median_deg;
    out.pct_11 += m.pct_11;
    out.pct_22 += m.pct_22;
    out.pct_30 += m.pct_30;
    out.pixel_count += m.pixel_count;
  }
  double n = static_cast<double>(ms.size());
  out.mean_deg /= n;
  out.median_deg /= n;
  out.pct_11 /= n;
  out.pct_22 /= n;
  out.pct_30 /= n;
  return out;
}

void write_depth_csv(const fs::path& path,
                     const std::vector<std::tuple<std::string, std::string,
                                                  DepthMetrics>>& rows) {
  std::ofstream f(path);
  f << "condition,seed,split,pixels,rms,rel,log10,delta1,delta2,delta3\n";
  for (const auto& [cond, seed, m] : rows)
    f << cond << "," << seed << ",test," << m.pixel_count << "," << m.rms << ","
      << m.rel << "," << m.log10 << "," << m.delta1 << "," << m.delta2 << ","
      << m.delta3 << "\n";
}

TrainOptions make_options(ModelKind kind, uint64_t seed,
                          const ExperimentConfig& cfg) {
  TrainOptions opt;
  opt.kind = kind;
  opt.seed = seed;
  opt.batch = cfg.hyper.batch;
  opt.lr = cfg.hyper.lr;
  if (is_classifier(kind))
    opt.epochs = cfg.hyper.epochs_pretext;
  else if (kind == ModelKind::Normals)
    opt.epochs = cfg.hyper.epochs_normals;
  else
    opt.epochs = cfg.hyper.epochs_depth;
  return opt;
}

fs::path pretext_checkpoint_path(const fs::path& out_root) {
  return out_root / "pretext" / "run" / "checkpoint.ckpt";
}

void require_artifact(const fs::path& p, const std::string& producer) {
  if (!fs::exists(p))
    throw ConfigError("missing required artifact " + p.string() +
                      "; run `experiment --name " + producer + "` first");
}

std::string run_case_study(const Dataset& data, const ExperimentConfig& cfg,
                           const fs::path& dir) {
  std::vector<std::tuple<std::string, std::string, DepthMetrics>> rows;
  nlohmann::json summary;
  summary["experiment"] = "case_study";

  DepthMetrics avg = eval_average_baseline(data, "test");
  rows.push_back({"average", "-", avg});
  summary["conditions"]["average"]["mean"] = depth_metrics_json(avg);

  for (ModelKind kind : {ModelKind::Echo2Depth, ModelKind::Rgb2Depth,
                         ModelKind::RgbEcho2Depth}) {
    std::vector<DepthMetrics> per_seed;
    for (uint64_t seed : cfg.hyper.transfer_seeds) {
      TrainOptions opt = make_options(kind, seed, cfg);
      auto run_dir = dir / (to_string(kind) + "_seed" + std::to_string(seed));
      TrainResult tr = train_model(data, cfg.model, opt, run_dir);
      Model model(kind, cfg.model, seed);
      model.load(tr.checkpoint);
      DepthMetrics m = eval_depth_model(model, data, "test");
      per_seed.push_back(m);
      rows.push_back({to_string(kind), std::to_string(seed), m});
      summary["conditions"][to_string(kind)]["seeds"].push_back(
          depth_metrics_json(m));
    }
    DepthMetrics mean = mean_depth_metrics(per_seed);
    rows.push_back({to_string(kind), "mean", mean});
    summary["conditions"][to_string(kind)]["mean"] = depth_metrics_json(mean);
  }
  write_depth_csv(dir / "report.csv", rows);
  return summary.dump(2);
}

std::string run_pretext(const Dataset& data, const ExperimentConfig& cfg,
                        const fs::path& dir) {
  TrainOptions opt = make_options(ModelKind::Pretext,
                                  cfg.hyper.transfer_seeds.front(), cfg);
  TrainResult tr = train_model(data, cfg.model, opt, dir / "run");
  Model model(ModelKind::Pretext, cfg.model, opt.seed);
  model.load(tr.checkpoint);
  double test_acc = eval_classification_model(model, data, "test");
  double val_acc = data.split().val.empty()
                       ? 0.0
                       : eval_classification_model(model, data, "val");

  std::ofstream f(dir / "report.csv");
  f << "condition,seed,split,samples,accuracy\n";
  f << "visualechoes," << opt.seed << ",test,"
    << data.split_records("test").size() * 4 << "," << test_acc << "\n";

  nlohmann::json summary = {{"experiment", "pretext"},
                            {"test_accuracy", test_acc},
                            {"val_accuracy", val_acc},
                            {"checkpoint", (dir / "run" / "checkpoint.ckpt").string()}};
  return summary.dump(2);
}

std::string run_transfer_depth(const Dataset& data, const ExperimentConfig& cfg,
                               const fs::path& dir, const fs::path& out_root) {
  fs::path ckpt = pretext_checkpoint_path(out_root);
  require_artifact(ckpt, "pretext");

  std::vector<std::tuple<std::string, std::string, DepthMetrics>> rows;
  nlohmann::json summary;
  summary["experiment"] = "transfer_depth";
  for (const auto& [cond, init] :
       std::vector<std::pair<std::string, std::optional<fs::path>>>{
           {"scratch", std::nullopt}, {"visualechoes", ckpt}}) {
    std::vector<DepthMetrics> per_seed;
    for (uint64_t seed : cfg.hyper.transfer_seeds) {
      TrainOptions opt = make_options(ModelKind::Rgb2Depth, seed, cfg);
      opt.lr = cfg.hyper.lr_transfer;
      opt.init_checkpoint = init;
      auto run_dir = dir / (cond + "_seed" + std::to_string(seed));
      TrainResult tr = train_model(data, cfg.model, opt, run_dir);
      Model model(ModelKind::Rgb2Depth, cfg.model, seed);
      model.load(tr.checkpoint);
      DepthMetrics m = eval_depth_model(model, data, "test");
      per_seed.push_back(m);
      rows.push_back({cond, std::to_string(seed), m});
      summary["conditions"][cond]["seeds"].push_back(depth_metrics_json(m));
    }
    DepthMetrics mean = mean_depth_metrics(per_seed);
    rows.push_back({cond, "mean", mean});
    summary["conditions"][cond]["mean"] = depth_metrics_json(mean);
  }
  write_depth_csv(dir / "report.csv", rows);
  return summary.dump(2);
}

std::string run_transfer_normals(const Dataset& data,
                                 const ExperimentConfig& cfg,
                                 const fs::path& dir, const fs::path& out_root) {
  fs::path ckpt = pretext_checkpoint_path(out_root);
  require_artifact(ckpt, "pretext");

  std::ofstream f(dir / "report.csv");
  f << "condition,seed,split,pixels,mean_deg,median_deg,pct_11_25,pct_22_5,"
       "pct_30\n";
  nlohmann::json summary;
  summary["experiment"] = "transfer_normals";
  for (const auto& [cond, init] :
       std::vector<std::pair<std::string, std::optional<fs::path>>>{
           {"scratch", std::nullopt}, {"visualechoes", ckpt}}) {
    std::vector<NormalMetrics> per_seed;
    for (uint64_t seed : cfg.hyper.transfer_seeds) {
      TrainOptions opt = make_options(ModelKind::Normals, seed, cfg);
      opt.lr = cfg.hyper.lr_transfer;
      opt.init_checkpoint = init;
      auto run_dir = dir / (cond + "_seed" + std::to_string(seed));
      TrainResult tr = train_model(data, cfg.model, opt, run_dir);
      Model model(ModelKind::Normals, cfg.model, seed);
      model.load(tr.checkpoint);
      NormalMetrics m = eval_normals_model(model, data, "test");
      per_seed.push_back(m);
      f << cond << "," << seed << ",test," << m.pixel_count << ","
        << m.mean_deg << "," << m.median_deg << "," << m.pct_11 << ","
        << m.pct_22 << "," << m.pct_30 << "\n";
      summary["conditions"][cond]["seeds"].push_back(normal_metrics_json(m));
    }
    NormalMetrics mean = mean_normal_metrics(per_seed);
    f << cond << ",mean,test," << mean.pixel_count << "," << mean.mean_deg
      << "," << mean.median_deg << "," << mean.pct_11 << "," << mean.pct_22
      << "," << mean.pct_30 << "\n";
    summary["conditions"][cond]["mean"] = normal_metrics_json(mean);
  }
  return summary.dump(2);
}

std::string run_ablations(const Dataset& data, const ExperimentConfig& cfg,
                          const fs::path& dir, const fs::path& out_root) {
  fs::path ve_ckpt = pretext_checkpoint_path(out_root);
  require_artifact(ve_ckpt, "pretext");

  // pre-train the two ablated pretext variants
  std::map<std::string, std::optional<fs::path>> inits;
  inits["scratch"] = std::nullopt;
  inits["visualechoes"] = ve_ckpt;
  for (const auto& [cond, kind] :
       std::vector<std::pair<std::string, ModelKind>>{
           {"simple_visualechoes", ModelKind::PretextSimple},
           {"binary_matching", ModelKind::BinaryMatch}}) {
    TrainOptions opt = make_options(kind, cfg.hyper.transfer_seeds.front(), cfg);
    TrainResult tr = train_model(data, cfg.model, opt, dir / (cond + "_pretrain"));
    inits[cond] = tr.checkpoint;
  }

  std::vector<std::tuple<std::string, std::string, DepthMetrics>> rows;
  nlohmann::json summary;
  summary["experiment"] = "ablations";
  for (const std::string cond : {"scratch", "simple_visualechoes",
                                 "binary_matching", "visualechoes"}) {
    std::vector<DepthMetrics> per_seed;
    for (uint64_t seed : cfg.hyper.transfer_seeds) {
      TrainOptions opt = make_options(ModelKind::Rgb2Depth, seed, cfg);
      opt.lr = cfg.hyper.lr_transfer;
      opt.init_checkpoint = inits.at(cond);
      auto run_dir = dir / (cond + "_seed" + std::to_string(seed));
      TrainResult tr = train_model(data, cfg.model, opt, run_dir);
      Model model(ModelKind::Rgb2Depth, cfg.model, seed);
      model.load(tr.checkpoint);
      DepthMetrics m = eval_depth_model(model, data, "test");
      per_seed.push_back(m);
      rows.push_back({cond, std::to_string(seed), m});
      summary["conditions"][cond]["seeds"].push_back(depth_metrics_json(m));
    }
    DepthMetrics mean = mean_depth_metrics(per_seed);
    rows.push_back({cond, "mean", mean});
    summary["conditions"][cond]["mean"] = depth_metrics_json(mean);
  }
  write_depth_csv(dir / "report.csv", rows);
  return summary.dump(2);
}

}  // namespace

std::string run_experiment(const std::string& name, const Dataset& data,
                           const ExperimentConfig& cfg,
                           const fs::path& out_root) {
  fs::path dir = out_root / name;
  fs::create_directories(dir);
  std::string summary;
  if (name == "case_study")
    summary = run_case_study(data, cfg, dir);
  else if (name == "pretext")
    summary = run_pretext(data, cfg, dir);
  else if (name == "transfer_depth")
    summary = run_transfer_depth(data, cfg, dir, out_root);
  else if (name == "transfer_normals")
    summary = run_transfer_normals(data, cfg, dir, out_root);
  else if (name == "ablations")
    summary = run_ablations(data, cfg, dir, out_root);
  else
    throw std::invalid_argument("unknown experiment: " + name);
  std::ofstream f(dir / "summary.json");
  f << summary << "\n";
  return summary;
}

}  // namespace ve
