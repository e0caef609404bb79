#include "ve/eval.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ve {

DepthMetrics depth_metrics(const std::vector<DepthMap>& pred,
                           const std::vector<DepthMap>& gt) {
  if (pred.size() != gt.size())
    throw std::invalid_argument("depth_metrics: sample count mismatch");
  DepthMetrics m;
  double sq = 0, rel = 0, lg = 0;
  size_t d1 = 0, d2 = 0, d3 = 0, count = 0;
  for (size_t s = 0; s < pred.size(); ++s) {
    const auto& p = pred[s];
    const auto& g = gt[s];
    if (p.height != g.height || p.width != g.width)
      throw std::invalid_argument("depth_metrics: shape mismatch");
    for (size_t i = 0; i < g.data.size(); ++i) {
      double gv = g.data[i];
      if (gv <= 1e-3) continue;
      double pv = p.data[i];
      double d = pv - gv;
      sq += d * d;
      rel += std::abs(d) / gv;
      lg += std::abs(std::log10(pv) - std::log10(gv));
      double ratio = std::max(pv / gv, gv / pv);
      if (ratio < 1.25) ++d1;
      if (ratio < 1.25 * 1.25) ++d2;
      if (ratio < 1.25 * 1.25 * 1.25) ++d3;
      ++count;
    }
  }
  if (count == 0) throw std::invalid_argument("depth_metrics: empty valid mask");
  m.rms = std::sqrt(sq / count);
  m.rel = rel / count;
  m.log10 = lg / count;
  m.delta1 = static_cast<double>(d1) / count;
  m.delta2 = static_cast<double>(d2) / count;
  m.delta3 = static_cast<double>(d3) / count;
  m.pixel_count = count;
  return m;
}

NormalMetrics normal_metrics(const std::vector<NormalMap>& pred,
                             const std::vector<NormalMap>& gt) {
  if (pred.size() != gt.size())
    throw std::invalid_argument("normal_metrics: sample count mismatch");
  std::vector<double> angles;
  for (size_t s = 0; s < pred.size(); ++s) {
    const auto& p = pred[s];
    const auto& g = gt[s];
    if (p.height != g.height || p.width != g.width)
      throw std::invalid_argument("normal_metrics: shape mismatch");
    for (size_t i = 0; i < g.valid.size(); ++i) {
      if (!g.valid[i] || !p.valid[i]) continue;
      double dot = 0;
      for (int c = 0; c < 3; ++c)
        dot += static_cast<double>(p.data[i * 3 + c]) * g.data[i * 3 + c];
      dot = std::clamp(dot, -1.0, 1.0);
      angles.push_back(std::acos(dot) * 180.0 / M_PI);
    }
  }
  if (angles.empty())
    throw std::invalid_argument("normal_metrics: empty valid mask");
  NormalMetrics m;
  m.pixel_count = angles.size();
  double sum = 0;
  size_t c11 = 0, c22 = 0, c30 = 0;
  for (double a : angles) {
    sum += a;
    if (a < 11.25) ++c11;
    if (a < 22.5) ++c22;
    if (a < 30.0) ++c30;
  }
  m.mean_deg = sum / angles.size();
  std::sort(angles.begin(), angles.end());
  size_t n = angles.size();
  m.median_deg = n % 2 ? angles[n / 2] : 0.5 * (angles[n / 2 - 1] + angles[n / 2]);
  m.pct_11 = static_cast<double>(c11) / n;
  m.pct_22 = static_cast<double>(c22) / n;
  m.pct_30 = static_cast<double>(c30) / n;
  return m;
}

DepthMap average_baseline(const std::vector<DepthMap>& train_maps) {
  if (train_maps.empty())
    throw std::invalid_argument("average_baseline: empty training set");
  DepthMap out;
  out.height = train_maps[0].height;
  out.width = train_maps[0].width;
  std::vector<double> acc(train_maps[0].data.size(), 0.0);
  for (const auto& m : train_maps) {
    if (m.data.size() != acc.size())
      throw std::invalid_argument("average_baseline: shape mismatch");
    for (size_t i = 0; i < acc.size(); ++i) acc[i] += m.data[i];
  }
  out.data.resize(acc.size());
  for (size_t i = 0; i < acc.size(); ++i)
    out.data[i] = static_cast<float>(acc[i] / train_maps.size());
  return out;
}

double classification_accuracy(const std::vector<std::vector<float>>& logits,
                               const std::vector<int>& labels) {
  if (logits.empty() || logits.size() != labels.size())
    throw std::invalid_argument("classification_accuracy: bad inputs");
  size_t correct = 0;
  for (size_t i = 0; i < logits.size(); ++i) {
    const auto& row = logits[i];
    size_t best = 0;
    for (size_t j = 1; j < row.size(); ++j)
      if (row[j] > row[best]) best = j;  // ties keep the lowest index
    if (static_cast<int>(best) == labels[i]) ++correct;
  }
  return static_cast<double>(correct) / logits.size();
}

}  // namespace ve
