#include "ve/models.hpp"

#include <sstream>

#include "ve/scene.hpp"

namespace ve {

ModelKind model_kind_from_string(const std::string& s) {
  if (s == "rgb2depth") return ModelKind::Rgb2Depth;
  if (s == "echo2depth") return ModelKind::Echo2Depth;
  if (s == "rgbecho2depth") return ModelKind::RgbEcho2Depth;
  if (s == "pretext") return ModelKind::Pretext;
  if (s == "pretext_simple") return ModelKind::PretextSimple;
  if (s == "binary_match") return ModelKind::BinaryMatch;
  if (s == "normals") return ModelKind::Normals;
  throw std::invalid_argument("unknown model kind: " + s);
}

std::string to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::Rgb2Depth: return "rgb2depth";
    case ModelKind::Echo2Depth: return "echo2depth";
    case ModelKind::RgbEcho2Depth: return "rgbecho2depth";
    case ModelKind::Pretext: return "pretext";
    case ModelKind::PretextSimple: return "pretext_simple";
    case ModelKind::BinaryMatch: return "binary_match";
    case ModelKind::Normals: return "normals";
  }
  return "?";
}

int Model::num_classes() const {
  switch (kind_) {
    case ModelKind::Pretext: return 4;
    case ModelKind::PretextSimple:
    case ModelKind::BinaryMatch: return 2;
    default:
      throw std::logic_error("num_classes on a non-classification model");
  }
}

std::vector<NodePtr<float>> Model::Encoder::forward(const NodePtr<float>& x,
                                                    float slope) const {
  std::vector<NodePtr<float>> acts;
  NodePtr<float> cur = x;
  for (const auto& conv : convs) {
    cur = leaky_relu(conv(cur), slope);
    acts.push_back(cur);
  }
  return acts;
}

NodePtr<float> Model::Decoder::forward(const NodePtr<float>& bottleneck,
                                       const std::vector<NodePtr<float>>& skips,
                                       float slope) const {
  NodePtr<float> cur = bottleneck;
  for (size_t i = 0; i < convs.size(); ++i) {
    cur = upsample_nearest2(cur);
    if (use_skips && i + 2 <= skips.size()) {
      // skips are encoder activations, finest first; stage i consumes the
      // activation at the matching resolution
      cur = concat_channels(cur, skips[skips.size() - 2 - i]);
    }
    cur = leaky_relu(convs[i](cur), slope);
  }
  return final(cur);
}

Model::Model(ModelKind kind, const ModelConfig& cfg, uint64_t seed)
    : kind_(kind), cfg_(cfg) {
  Pcg32 rng(seed, 0x9e3779b97f4a7c15ULL);
  const auto& vw = cfg.vis_widths;
  const auto& aw = cfg.audio_widths;
  const int n_blocks = static_cast<int>(vw.size());
  const int bottleneck_ch = vw.back();
  const int bott = cfg.image_size >> n_blocks;
  if (bott < 1) throw ConfigError("image size too small for encoder depth");

  has_vis_ = kind != ModelKind::Echo2Depth;
  has_audio_ = kind == ModelKind::Echo2Depth || kind == ModelKind::RgbEcho2Depth ||
               kind == ModelKind::Pretext || kind == ModelKind::PretextSimple ||
               kind == ModelKind::BinaryMatch;
  has_decoder_ = kind == ModelKind::Rgb2Depth || kind == ModelKind::Echo2Depth ||
                 kind == ModelKind::RgbEcho2Depth || kind == ModelKind::Normals;

  if (has_vis_) {
    int in_ch = 3;
    for (int i = 0; i < n_blocks; ++i) {
      vis_enc_.convs.emplace_back(params_, "enc.conv" + std::to_string(i),
                                  in_ch, vw[i], 4, 2, 1, rng);
      in_ch = vw[i];
    }
  }
  if (has_audio_) {
    int in_ch = 3;  // left, right, and their difference (level cue)
    // bottleneck spatial dims after the strided convs (k=4, s=2, p=1)
    int ab = cfg.spec_bins, af = cfg.spec_frames;
    for (size_t i = 0; i < aw.size(); ++i) {
      audio_enc_.convs.emplace_back(params_, "aud.conv" + std::to_string(i),
                                    in_ch, aw[i], 4, 2, 1, rng);
      in_ch = aw[i];
      ab = (ab - 2) / 2 + 1;
      af = (af - 2) / 2 + 1;
    }
    if (ab < 1 || af < 1)
      throw ConfigError("spectrogram too small for audio encoder depth");
    // classifiers flatten rather than pool: interaural timing and
    // frequency-comb cues live at absolute time/frequency positions,
    // which a global average would erase. The depth decoders only need
    // pooled room statistics and train poorly from the huge flat map.
    audio_flat_ = kind == ModelKind::Pretext ||
                  kind == ModelKind::PretextSimple ||
                  kind == ModelKind::BinaryMatch;
    audio_fc_ = Linear<float>(params_, "aud.fc",
                              audio_flat_ ? aw.back() * ab * af : aw.back(),
                              cfg.fusion_dim, rng);
  }

  switch (kind) {
    case ModelKind::Pretext:
    case ModelKind::PretextSimple:
    case ModelKind::BinaryMatch:
      // flattened bottleneck: the offset class hinges on where the near
      // walls sit in the view, which pooling would average away
      vis_proj_ = Linear<float>(params_, "head.visproj",
                                bottleneck_ch * bott * bott, cfg.fusion_dim,
                                rng);
      fusion_fc_ = Linear<float>(params_, "head.fusion", 3 * cfg.fusion_dim,
                                 cfg.fusion_dim, rng);
      class_fc_ =
          Linear<float>(params_, "head.class", cfg.fusion_dim, num_classes(), rng);
      break;
    case ModelKind::Echo2Depth:
      audio_to_map_ = Linear<float>(params_, "head.audio_to_map",
                                    cfg.fusion_dim,
                                    bottleneck_ch * bott * bott, rng);
      break;
    default:
      break;
  }

  if (has_decoder_) {
    int in_ch = bottleneck_ch;
    if (kind == ModelKind::RgbEcho2Depth) in_ch += cfg.fusion_dim;
    decoder_.use_skips = has_vis_;
    // decoder widths mirror the encoder, with a repeated finest width
    std::vector<int> out_chs;
    for (int i = n_blocks - 2; i >= 0; --i) out_chs.push_back(vw[i]);
    out_chs.push_back(vw[0]);
    for (size_t i = 0; i < out_chs.size(); ++i) {
      int conv_in = in_ch;
      if (decoder_.use_skips && i + 1 < out_chs.size())
        conv_in += vw[n_blocks - 2 - static_cast<int>(i)];
      decoder_.convs.emplace_back(params_, "dec.conv" + std::to_string(i),
                                  conv_in, out_chs[i], 3, 1, 1, rng);
      in_ch = out_chs[i];
    }
    const int out_ch = kind == ModelKind::Normals ? 3 : 1;
    decoder_.final =
        Conv2d<float>(params_, "dec.final", in_ch, out_ch, 3, 1, 1, rng);
  }
}

NodePtr<float> Model::audio_feature(const TensorF& spec) {
  if (spec.rank() != 4 || spec.dim(1) != 2)
    throw ShapeError("spectrogram tensor must be (B,2,bins,frames), got " +
                     shape_str(spec.shape));
  // append the interaural difference as a third channel: the lateral
  // cue is the ratio of ear magnitudes, a feature the encoder would
  // otherwise have to spend capacity rediscovering
  const int b = spec.dim(0), f = spec.dim(2), t = spec.dim(3);
  const size_t plane = static_cast<size_t>(f) * t;
  TensorF aug({b, 3, f, t});
  for (int n = 0; n < b; ++n) {
    const float* lc = &spec.data[n * 2 * plane];
    const float* rc = lc + plane;
    float* dst = &aug.data[n * 3 * plane];
    std::copy_n(lc, plane, dst);
    std::copy_n(rc, plane, dst + plane);
    for (size_t i = 0; i < plane; ++i) dst[2 * plane + i] = lc[i] - rc[i];
  }
  auto x = make_leaf(aug, false);
  auto acts = audio_enc_.forward(x, cfg_.leaky_slope);
  const auto& bs = acts.back()->value.shape;
  auto feat = audio_flat_
                  ? reshape(acts.back(), {bs[0], bs[1] * bs[2] * bs[3]})
                  : global_avg_pool(acts.back());
  return leaky_relu(audio_fc_(feat), cfg_.leaky_slope);
}

NodePtr<float> Model::visual_bottleneck(const TensorF& rgb,
                                        std::vector<NodePtr<float>>* skips) {
  if (rgb.rank() != 4 || rgb.dim(1) != 3 || rgb.dim(2) != cfg_.image_size ||
      rgb.dim(3) != cfg_.image_size)
    throw ShapeError("rgb tensor must be (B,3," +
                     std::to_string(cfg_.image_size) + "," +
                     std::to_string(cfg_.image_size) + "), got " +
                     shape_str(rgb.shape));
  auto x = make_leaf(rgb, false);
  auto acts = vis_enc_.forward(x, cfg_.leaky_slope);
  if (skips) *skips = acts;
  return acts.back();
}

NodePtr<float> Model::forward_depth(const TensorF& rgb, const TensorF* spec) {
  const int n_blocks = static_cast<int>(cfg_.vis_widths.size());
  const int bott = cfg_.image_size >> n_blocks;
  NodePtr<float> raw;
  switch (kind_) {
    case ModelKind::Rgb2Depth: {
      std::vector<NodePtr<float>> skips;
      auto b = visual_bottleneck(rgb, &skips);
      raw = decoder_.forward(b, skips, cfg_.leaky_slope);
      break;
    }
    case ModelKind::Echo2Depth: {
      if (!spec) throw ShapeError("echo2depth requires a spectrogram input");
      auto feat = audio_feature(*spec);
      auto map = leaky_relu(audio_to_map_(feat), cfg_.leaky_slope);
      auto shaped = reshape(
          map, {feat->value.dim(0), cfg_.vis_widths.back(), bott, bott});
      raw = decoder_.forward(shaped, {}, cfg_.leaky_slope);
      break;
    }
    case ModelKind::RgbEcho2Depth: {
      if (!spec) throw ShapeError("rgbecho2depth requires a spectrogram input");
      std::vector<NodePtr<float>> skips;
      auto b = visual_bottleneck(rgb, &skips);
      auto feat = audio_feature(*spec);
      auto tiled = tile_spatial(feat, bott, bott);
      raw = decoder_.forward(concat_channels(b, tiled), skips, cfg_.leaky_slope);
      break;
    }
    default:
      throw std::logic_error("forward_depth on model kind " + to_string(kind_));
  }
  return scale(sigmoid(raw), cfg_.max_depth);
}

NodePtr<float> Model::forward_logits(const TensorF& rgb, const TensorF& spec) {
  if (kind_ != ModelKind::Pretext && kind_ != ModelKind::PretextSimple &&
      kind_ != ModelKind::BinaryMatch)
    throw std::logic_error("forward_logits on model kind " + to_string(kind_));
  auto b = visual_bottleneck(rgb, nullptr);
  const auto& bsh = b->value.shape;
  auto vis = reshape(b, {bsh[0], bsh[1] * bsh[2] * bsh[3]});
  auto aud = audio_feature(spec);  // (B, fusion_dim)
  // project vision into the audio feature space and include the
  // elementwise product: the offset class depends on the agreement
  // between what is seen and what is heard, a multiplicative cue that a
  // plain concatenation head struggles to express
  auto visp = leaky_relu(vis_proj_(vis), cfg_.leaky_slope);
  const int batch = vis->value.dim(0);
  const int d = cfg_.fusion_dim;
  auto to4 = [batch, d](const NodePtr<float>& t) {
    return reshape(t, {batch, d, 1, 1});
  };
  auto cat = reshape(
      concat_channels(concat_channels(to4(visp), to4(aud)), to4(mul(visp, aud))),
      {batch, 3 * d});
  auto fused = leaky_relu(fusion_fc_(cat), cfg_.leaky_slope);
  return class_fc_(fused);
}

NodePtr<float> Model::forward_normals(const TensorF& rgb) {
  if (kind_ != ModelKind::Normals)
    throw std::logic_error("forward_normals on model kind " + to_string(kind_));
  std::vector<NodePtr<float>> skips;
  auto b = visual_bottleneck(rgb, &skips);
  auto raw = decoder_.forward(b, skips, cfg_.leaky_slope);
  return normalize_channels(raw);
}

void Model::save(const std::filesystem::path& path) const {
  std::vector<CheckpointEntry> entries;
  for (const auto& [name, node] : params_.items())
    entries.push_back({name, node->value});
  write_checkpoint(path, entries);
}

void Model::load(const std::filesystem::path& path) {
  auto entries = read_checkpoint(path);
  std::ostringstream bad;
  for (auto& [name, node] : params_.items()) {
    auto it = std::find_if(entries.begin(), entries.end(),
                           [&](const CheckpointEntry& e) { return e.name == name; });
    if (it == entries.end()) {
      bad << " missing:" << name;
      continue;
    }
    if (it->tensor.shape != node->value.shape) {
      bad << " shape:" << name;
      continue;
    }
    node->value = it->tensor;
  }
  if (!bad.str().empty())
    throw IoError("checkpoint does not match architecture:" + bad.str());
}

void Model::load_encoder(const std::filesystem::path& checkpoint) {
  auto entries = read_checkpoint(checkpoint);
  std::ostringstream bad;
  int loaded = 0;
  for (auto& [name, node] : params_.items()) {
    if (name.rfind("enc.", 0) != 0) continue;
    auto it = std::find_if(entries.begin(), entries.end(),
                           [&](const CheckpointEntry& e) { return e.name == name; });
    if (it == entries.end()) {
      bad << " missing:" << name;
      continue;
    }
    if (it->tensor.shape != node->value.shape) {
      bad << " shape:" << name;
      continue;
    }
    node->value = it->tensor;
    ++loaded;
  }
  if (!bad.str().empty())
    throw IoError("encoder checkpoint does not match:" + bad.str());
  if (loaded == 0) throw IoError("checkpoint contains no encoder parameters");
}

}  // namespace ve
