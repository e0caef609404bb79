#pragma once

#include <map>
#include <string>

#include "ve/autodiff.hpp"
#include "ve/pcg32.hpp"

namespace ve {

// Named trainable parameters in registration order. The order defines the
// checkpoint layout and the Adam state association.
template <typename T>
class ParamStore {
 public:
  NodePtr<T> add(const std::string& name, TensorT<T> init) {
    for (const auto& [n, _] : items_)
      if (n == name) throw std::invalid_argument("duplicate parameter " + name);
    auto node = make_leaf(std::move(init), true);
    items_.emplace_back(name, node);
    return node;
  }

  const std::vector<std::pair<std::string, NodePtr<T>>>& items() const {
    return items_;
  }

  NodePtr<T> find(const std::string& name) const {
    for (const auto& [n, node] : items_)
      if (n == name) return node;
    return nullptr;
  }

  void zero_grads() {
    for (auto& [_, node] : items_) node->zero_grad();
  }

  size_t count() const { return items_.size(); }

 private:
  std::vector<std::pair<std::string, NodePtr<T>>> items_;
};

// He-normal initialization for conv/FC weights, zero biases.
template <typename T>
TensorT<T> he_normal(std::vector<int> shape, int fan_in, Pcg32& rng) {
  TensorT<T> t(std::move(shape));
  double stddev = std::sqrt(2.0 / fan_in);
  for (auto& v : t.data) v = static_cast<T>(rng.normal() * stddev);
  return t;
}

template <typename T>
struct Conv2d {
  NodePtr<T> w, b;
  int stride = 1, pad = 1;

  Conv2d() = default;
  Conv2d(ParamStore<T>& store, const std::string& name, int in_ch, int out_ch,
         int k, int stride_, int pad_, Pcg32& rng)
      : stride(stride_), pad(pad_) {
    w = store.add(name + ".w",
                  he_normal<T>({out_ch, in_ch, k, k}, in_ch * k * k, rng));
    b = store.add(name + ".b", TensorT<T>({out_ch}));
  }

  NodePtr<T> operator()(const NodePtr<T>& x) const {
    return conv2d(x, w, b, stride, pad);
  }
};

template <typename T>
struct Linear {
  NodePtr<T> w, b;

  Linear() = default;
  Linear(ParamStore<T>& store, const std::string& name, int in_dim,
         int out_dim, Pcg32& rng) {
    w = store.add(name + ".w", he_normal<T>({out_dim, in_dim}, in_dim, rng));
    b = store.add(name + ".b", TensorT<T>({out_dim}));
  }

  NodePtr<T> operator()(const NodePtr<T>& x) const { return linear(x, w, b); }
};

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Standard Adam with bias correction, one moment pair per parameter.
template <typename T>
class Adam {
 public:
  explicit Adam(AdamConfig cfg = {}) : cfg_(cfg) {}

  void step(ParamStore<T>& params) {
    if (m_.empty()) {
      for (const auto& [_, node] : params.items()) {
        m_.emplace_back(node->value.shape);
        v_.emplace_back(node->value.shape);
      }
    }
    if (m_.size() != params.count())
      throw std::invalid_argument("adam state does not match parameter set");
    ++t_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, t_);
    const double bc2 = 1.0 - std::pow(cfg_.beta2, t_);
    size_t pi = 0;
    for (auto& [_, node] : params.items()) {
      node->ensure_grad();
      auto& m = m_[pi];
      auto& v = v_[pi];
      ++pi;
      for (size_t i = 0; i < node->value.numel(); ++i) {
        double g = static_cast<double>(node->grad[i]);
        double mi = cfg_.beta1 * m.data[i] + (1.0 - cfg_.beta1) * g;
        double vi = cfg_.beta2 * v.data[i] + (1.0 - cfg_.beta2) * g * g;
        m.data[i] = mi;
        v.data[i] = vi;
        double update = cfg_.lr * (mi / bc1) / (std::sqrt(vi / bc2) + cfg_.eps);
        node->value[i] -= static_cast<T>(update);
      }
    }
  }

  int64_t step_count() const { return t_; }
  const AdamConfig& config() const { return cfg_; }

 private:
  AdamConfig cfg_;
  int64_t t_ = 0;
  std::vector<TensorT<double>> m_, v_;
};

}  // namespace ve
