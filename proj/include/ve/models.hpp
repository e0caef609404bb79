#pragma once

#include <filesystem>

#include "ve/blob.hpp"
#include "ve/nn.hpp"

namespace ve {

enum class ModelKind {
  Rgb2Depth,
  Echo2Depth,
  RgbEcho2Depth,
  Pretext,
  PretextSimple,
  BinaryMatch,
  Normals,
};

ModelKind model_kind_from_string(const std::string& s);
std::string to_string(ModelKind kind);

// Orientation offset classes of the pretext task:
// Same (0), Right (+90), Opposite (+180), Left (+270).
enum class OrientationOffset : int { Same = 0, Right = 1, Opposite = 2, Left = 3 };

inline OrientationOffset orientation_offset(int echo_azimuth, int view_azimuth) {
  int d = (((echo_azimuth - view_azimuth) % 360) + 360) % 360;
  return static_cast<OrientationOffset>(d / 90);
}

struct ModelConfig {
  int image_size = 64;
  std::vector<int> vis_widths = {16, 32, 64, 128};
  std::vector<int> audio_widths = {16, 32, 64, 128};
  int fusion_dim = 128;
  float max_depth = 10.0f;
  int spec_bins = 257;
  int spec_frames = 162;
  float leaky_slope = 0.2f;
};

// All networks share the same VisualEncoder parameter names ("enc.*"),
// so a pretext checkpoint loads into the downstream nets without
// remapping.
class Model {
 public:
  Model(ModelKind kind, const ModelConfig& cfg, uint64_t seed);

  ModelKind kind() const { return kind_; }
  const ModelConfig& config() const { return cfg_; }
  ParamStore<float>& params() { return params_; }
  const ParamStore<float>& params() const { return params_; }
  int num_classes() const;

  // rgb: (B,3,S,S); spec: (B,2,bins,frames), required per kind.
  // Returns (B,1,S,S) depth in (0, max_depth).
  NodePtr<float> forward_depth(const TensorF& rgb, const TensorF* spec);

  // (B, num_classes) logits.
  NodePtr<float> forward_logits(const TensorF& rgb, const TensorF& spec);

  // (B,3,S,S) unit normals.
  NodePtr<float> forward_normals(const TensorF& rgb);

  void save(const std::filesystem::path& path) const;
  void load(const std::filesystem::path& path);
  // Loads only "enc.*" entries (pretext -> downstream transfer).
  void load_encoder(const std::filesystem::path& checkpoint);

 private:
  struct Encoder {
    std::vector<Conv2d<float>> convs;
    // returns per-block activations; back() is the bottleneck
    std::vector<NodePtr<float>> forward(const NodePtr<float>& x,
                                        float slope) const;
  };
  struct Decoder {
    std::vector<Conv2d<float>> convs;
    Conv2d<float> final;
    bool use_skips = false;
    NodePtr<float> forward(const NodePtr<float>& bottleneck,
                           const std::vector<NodePtr<float>>& skips,
                           float slope) const;
  };

  NodePtr<float> audio_feature(const TensorF& spec);
  NodePtr<float> visual_bottleneck(const TensorF& rgb,
                                   std::vector<NodePtr<float>>* skips);

  ModelKind kind_;
  ModelConfig cfg_;
  ParamStore<float> params_;

  Encoder vis_enc_;                  // all kinds except echo2depth
  Encoder audio_enc_;                // audio kinds
  Linear<float> audio_fc_;           // audio feature head
  Linear<float> vis_proj_;           // classification kinds: vision -> fusion space
  Linear<float> fusion_fc_, class_fc_;  // classification kinds
  Linear<float> audio_to_map_;       // echo2depth
  Decoder decoder_;                  // dense-output kinds
  bool has_vis_ = false, has_audio_ = false, has_decoder_ = false;
  bool audio_flat_ = false;  // classifiers keep the positional audio map
};

}  // namespace ve
