#pragma once

#include <vector>

#include "ve/render.hpp"

namespace ve {

struct DepthMetrics {
  double rms = 0;     // meters
  double rel = 0;
  double log10 = 0;
  double delta1 = 0, delta2 = 0, delta3 = 0;  // fractions in [0,1]
  size_t pixel_count = 0;
};

struct NormalMetrics {
  double mean_deg = 0;
  double median_deg = 0;
  double pct_11 = 0, pct_22 = 0, pct_30 = 0;
  size_t pixel_count = 0;
};

// Pixel-pooled over all samples; valid mask is gt > 1e-3 m.
DepthMetrics depth_metrics(const std::vector<DepthMap>& pred,
                           const std::vector<DepthMap>& gt);

// Angle = arccos(clamp(p.g, -1, 1)); masks of pred and gt intersected.
NormalMetrics normal_metrics(const std::vector<NormalMap>& pred,
                             const std::vector<NormalMap>& gt);

// Per-pixel mean over the training depth maps.
DepthMap average_baseline(const std::vector<DepthMap>& train_maps);

// Fraction of argmax(logits) == label; ties break toward the lowest index.
double classification_accuracy(const std::vector<std::vector<float>>& logits,
                               const std::vector<int>& labels);

}  // namespace ve
