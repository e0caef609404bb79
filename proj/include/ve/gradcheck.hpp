#pragma once

#include <functional>
#include <string>

#include "ve/nn.hpp"

namespace ve {

struct GradCheckResult {
  std::string name;
  double max_err = 0;  // |analytic - fd| / max(1, |analytic|, |fd|)
  bool ok = false;
};

namespace gradcheck_detail {

// Random tensor with values kept away from the kinks of relu/max-pool so
// central differences stay on one side of each breakpoint.
inline TensorD random_tensor(std::vector<int> shape, Pcg32& rng,
                             double kink_margin = 0.05) {
  TensorD t(std::move(shape));
  for (auto& v : t.data) {
    v = rng.normal();
    if (std::abs(v) < kink_margin) v = v < 0 ? -kink_margin : kink_margin;
  }
  return t;
}

using GraphFn =
    std::function<NodePtr<double>(const std::vector<NodePtr<double>>&)>;

inline GradCheckResult check(const std::string& name,
                             std::vector<TensorD> inputs, const GraphFn& fn,
                             double tol, double h = 1e-4) {
  GradCheckResult res;
  res.name = name;

  auto build = [&](const std::vector<TensorD>& vals) {
    std::vector<NodePtr<double>> leaves;
    for (const auto& v : vals) leaves.push_back(make_leaf(v, true));
    return std::make_pair(leaves, fn(leaves));
  };

  auto [leaves, loss] = build(inputs);
  if (loss->value.numel() != 1)
    throw std::logic_error("gradcheck graph must end in a scalar");
  backward(loss);

  for (size_t t = 0; t < inputs.size(); ++t) {
    for (size_t i = 0; i < inputs[t].numel(); ++i) {
      std::vector<TensorD> plus = inputs, minus = inputs;
      plus[t].data[i] += h;
      minus[t].data[i] -= h;
      double fp = build(plus).second->value[0];
      double fm = build(minus).second->value[0];
      double fd = (fp - fm) / (2 * h);
      double analytic = leaves[t]->grad[i];
      double err = std::abs(analytic - fd) /
                   std::max({1.0, std::abs(analytic), std::abs(fd)});
      res.max_err = std::max(res.max_err, err);
    }
  }
  res.ok = res.max_err < tol;
  return res;
}

// Reduce an arbitrary output to a scalar with fixed random weights so every
// output element contributes to the gradient.
inline GraphFn reduced(std::function<NodePtr<double>(
                           const std::vector<NodePtr<double>>&)> op,
                       const TensorD& weights) {
  return [op, weights](const std::vector<NodePtr<double>>& xs) {
    auto y = op(xs);
    return weighted_sum(y, weights);
  };
}

}  // namespace gradcheck_detail

// Finite-difference checks over the whole layer catalog, double precision.
inline std::vector<GradCheckResult> run_gradchecks(uint64_t seed = 5,
                                                   double tol = 1e-4) {
  using namespace gradcheck_detail;
  Pcg32 rng(seed, 0x6c078965ULL);
  std::vector<GradCheckResult> out;

  auto wts = [&](const std::vector<int>& shape) {
    TensorD w(shape);
    for (auto& v : w.data) v = rng.normal();
    return w;
  };

  {
    auto x = random_tensor({2, 3, 4, 4}, rng);
    auto w = wts(x.shape);
    out.push_back(check("relu", {x},
                        reduced([](const auto& xs) { return relu(xs[0]); }, w),
                        tol));
    out.push_back(check(
        "leaky_relu", {x},
        reduced([](const auto& xs) { return leaky_relu(xs[0], 0.2); }, w),
        tol));
    out.push_back(check(
        "sigmoid", {x},
        reduced([](const auto& xs) { return sigmoid(xs[0]); }, w), tol));
    out.push_back(check(
        "scale", {x},
        reduced([](const auto& xs) { return scale(xs[0], 0.37); }, w), tol));
    out.push_back(check(
        "mul", {x, random_tensor({2, 3, 4, 4}, rng)},
        reduced([](const auto& xs) { return mul(xs[0], xs[1]); }, w), tol));
    out.push_back(check(
        "reshape", {x},
        reduced([](const auto& xs) { return reshape(xs[0], {2, 48}); },
                wts({2, 48})),
        tol));
    out.push_back(check(
        "max_pool2", {x},
        reduced([](const auto& xs) { return max_pool2(xs[0]); },
                wts({2, 3, 2, 2})),
        tol));
    out.push_back(check(
        "upsample_nearest2", {x},
        reduced([](const auto& xs) { return upsample_nearest2(xs[0]); },
                wts({2, 3, 8, 8})),
        tol));
    out.push_back(check(
        "global_avg_pool", {x},
        reduced([](const auto& xs) { return global_avg_pool(xs[0]); },
                wts({2, 3})),
        tol));
    out.push_back(check(
        "normalize_channels", {x},
        reduced([](const auto& xs) { return normalize_channels(xs[0]); }, w),
        tol));
  }

  {
    auto a = random_tensor({2, 2, 3, 3}, rng);
    auto b = random_tensor({2, 4, 3, 3}, rng);
    out.push_back(check(
        "concat_channels", {a, b},
        reduced([](const auto& xs) { return concat_channels(xs[0], xs[1]); },
                wts({2, 6, 3, 3})),
        tol));
  }

  {
    auto f = random_tensor({2, 5}, rng);
    out.push_back(check(
        "tile_spatial", {f},
        reduced([](const auto& xs) { return tile_spatial(xs[0], 3, 3); },
                wts({2, 5, 3, 3})),
        tol));
  }

  {
    auto x = random_tensor({3, 4}, rng);
    auto w = random_tensor({2, 4}, rng);
    auto b = random_tensor({2}, rng);
    out.push_back(check(
        "linear", {x, w, b},
        reduced([](const auto& xs) { return linear(xs[0], xs[1], xs[2]); },
                wts({3, 2})),
        tol));
  }

  {
    auto x = random_tensor({2, 3, 6, 6}, rng);
    auto w = random_tensor({4, 3, 3, 3}, rng);
    auto b = random_tensor({4}, rng);
    out.push_back(check(
        "conv2d_k3s1", {x, w, b},
        reduced(
            [](const auto& xs) { return conv2d(xs[0], xs[1], xs[2], 1, 1); },
            wts({2, 4, 6, 6})),
        tol));
    auto w2 = random_tensor({4, 3, 4, 4}, rng);
    out.push_back(check(
        "conv2d_k4s2", {x, w2, b},
        reduced(
            [](const auto& xs) { return conv2d(xs[0], xs[1], xs[2], 2, 1); },
            wts({2, 4, 3, 3})),
        tol));
  }

  {
    auto logits = random_tensor({4, 3}, rng);
    std::vector<int> labels = {0, 2, 1, 2};
    out.push_back(check(
        "softmax_cross_entropy", {logits},
        [labels](const std::vector<NodePtr<double>>& xs) {
          return softmax_cross_entropy(xs[0], labels);
        },
        tol));
  }

  {
    auto pred = random_tensor({2, 1, 4, 4}, rng);
    auto gt = random_tensor({2, 1, 4, 4}, rng);
    // keep |pred - gt| away from the L1 kink
    for (size_t i = 0; i < pred.numel(); ++i)
      if (std::abs(pred.data[i] - gt.data[i]) < 0.05)
        pred.data[i] = gt.data[i] + 0.05;
    std::vector<uint8_t> mask(pred.numel(), 1);
    mask[3] = 0;
    mask[17] = 0;
    out.push_back(check(
        "l1_loss_masked", {pred},
        [gt, mask](const std::vector<NodePtr<double>>& xs) {
          return l1_loss(xs[0], gt.cast<double>(), mask);
        },
        tol));
  }

  {
    auto raw = random_tensor({2, 3, 3, 3}, rng);
    auto target = random_tensor({2, 3, 3, 3}, rng);
    // unit-normalize the target per pixel
    for (int b = 0; b < 2; ++b)
      for (int p = 0; p < 9; ++p) {
        double n = 0;
        for (int c = 0; c < 3; ++c) {
          double v = target.data[(b * 3 + c) * 9 + p];
          n += v * v;
        }
        n = std::sqrt(n);
        for (int c = 0; c < 3; ++c) target.data[(b * 3 + c) * 9 + p] /= n;
      }
    std::vector<uint8_t> mask(2 * 9, 1);
    mask[5] = 0;
    out.push_back(check(
        "cosine_loss", {raw},
        [target, mask](const std::vector<NodePtr<double>>& xs) {
          return cosine_loss(normalize_channels(xs[0]), target.cast<double>(),
                             mask);
        },
        tol));
  }

  {
    auto x = random_tensor({3, 5}, rng);
    out.push_back(check(
        "sum", {x}, [](const auto& xs) { return sum(xs[0]); }, tol));
    auto w = wts(x.shape);
    out.push_back(check(
        "weighted_sum", {x},
        [w](const std::vector<NodePtr<double>>& xs) {
          return weighted_sum(xs[0], w);
        },
        tol));
  }

  return out;
}

}  // namespace ve
