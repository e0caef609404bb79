#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <unordered_set>

#include "ve/tensor.hpp"

namespace ve {

struct ShapeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Reverse-mode tape node. Ops build nodes whose backward closure scatters
// this node's gradient into its parents' gradients.
template <typename T>
struct Node {
  TensorT<T> value;
  TensorT<T> grad;
  bool requires_grad = true;
  std::vector<std::shared_ptr<Node<T>>> parents;
  std::function<void(Node<T>&)> backward_op;

  void ensure_grad() {
    if (grad.data.empty()) grad = TensorT<T>(value.shape);
  }
  void zero_grad() {
    if (!grad.data.empty()) grad.fill(T(0));
  }
};

template <typename T>
using NodePtr = std::shared_ptr<Node<T>>;

template <typename T>
NodePtr<T> make_leaf(TensorT<T> value, bool requires_grad = true) {
  auto n = std::make_shared<Node<T>>();
  n->value = std::move(value);
  n->requires_grad = requires_grad;
  return n;
}

namespace detail {

template <typename T>
void topo_sort(const NodePtr<T>& root, std::vector<Node<T>*>& order) {
  std::unordered_set<Node<T>*> seen;
  // iterative post-order DFS
  std::vector<std::pair<Node<T>*, size_t>> stack{{root.get(), 0}};
  seen.insert(root.get());
  while (!stack.empty()) {
    auto& [node, idx] = stack.back();
    if (idx < node->parents.size()) {
      Node<T>* p = node->parents[idx++].get();
      if (!seen.count(p)) {
        seen.insert(p);
        stack.push_back({p, 0});
      }
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }
}

}  // namespace detail

// Backpropagate from a scalar loss node through the recorded tape.
template <typename T>
void backward(const NodePtr<T>& loss) {
  if (loss->value.numel() != 1)
    throw ShapeError("backward expects a scalar loss, got " +
                     shape_str(loss->value.shape));
  std::vector<Node<T>*> order;
  detail::topo_sort(loss, order);
  for (Node<T>* n : order) n->ensure_grad();
  loss->grad.fill(T(1));
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node<T>* n = *it;
    if (n->backward_op) n->backward_op(*n);
  }
}

// ---- elementwise ops -------------------------------------------------

template <typename T, typename F, typename DF>
NodePtr<T> unary_op(const NodePtr<T>& x, F f, DF df) {
  auto out = std::make_shared<Node<T>>();
  out->value = TensorT<T>(x->value.shape);
  for (size_t i = 0; i < x->value.numel(); ++i) out->value[i] = f(x->value[i]);
  out->parents = {x};
  NodePtr<T> xp = x;
  out->backward_op = [xp, df](Node<T>& self) {
    if (!xp->requires_grad && !xp->backward_op) return;
    xp->ensure_grad();
    for (size_t i = 0; i < self.value.numel(); ++i)
      xp->grad[i] += self.grad[i] * df(xp->value[i], self.value[i]);
  };
  return out;
}

template <typename T>
NodePtr<T> relu(const NodePtr<T>& x) {
  return unary_op(
      x, [](T v) { return v > T(0) ? v : T(0); },
      [](T v, T) { return v > T(0) ? T(1) : T(0); });
}

template <typename T>
NodePtr<T> leaky_relu(const NodePtr<T>& x, T slope = T(0.2)) {
  return unary_op(
      x, [slope](T v) { return v > T(0) ? v : slope * v; },
      [slope](T v, T) { return v > T(0) ? T(1) : slope; });
}

template <typename T>
NodePtr<T> sigmoid(const NodePtr<T>& x) {
  return unary_op(
      x, [](T v) { return T(1) / (T(1) + std::exp(-v)); },
      [](T, T y) { return y * (T(1) - y); });
}

template <typename T>
NodePtr<T> scale(const NodePtr<T>& x, T s) {
  return unary_op(x, [s](T v) { return s * v; }, [s](T, T) { return s; });
}

// Elementwise (Hadamard) product of two same-shape tensors.
template <typename T>
NodePtr<T> mul(const NodePtr<T>& a, const NodePtr<T>& b) {
  if (a->value.shape != b->value.shape)
    throw ShapeError("mul: shape mismatch " + shape_str(a->value.shape) +
                     " vs " + shape_str(b->value.shape));
  auto out = std::make_shared<Node<T>>();
  out->value = TensorT<T>(a->value.shape);
  for (size_t i = 0; i < out->value.numel(); ++i)
    out->value[i] = a->value[i] * b->value[i];
  out->parents = {a, b};
  NodePtr<T> ap = a, bp = b;
  out->backward_op = [ap, bp](Node<T>& self) {
    ap->ensure_grad();
    bp->ensure_grad();
    for (size_t i = 0; i < self.grad.numel(); ++i) {
      ap->grad[i] += self.grad[i] * bp->value[i];
      bp->grad[i] += self.grad[i] * ap->value[i];
    }
  };
  return out;
}

// ---- shape ops -------------------------------------------------------

template <typename T>
NodePtr<T> reshape(const NodePtr<T>& x, std::vector<int> new_shape) {
  if (TensorT<T>::numel_of(new_shape) != x->value.numel())
    throw ShapeError("reshape: cannot view " + shape_str(x->value.shape) +
                     " as " + shape_str(new_shape));
  auto out = std::make_shared<Node<T>>();
  out->value = TensorT<T>(new_shape, x->value.data);
  out->parents = {x};
  NodePtr<T> xp = x;
  out->backward_op = [xp](Node<T>& self) {
    xp->ensure_grad();
    for (size_t i = 0; i < self.grad.numel(); ++i) xp->grad[i] += self.grad[i];
  };
  return out;
}

template <typename T>
NodePtr<T> concat_channels(const NodePtr<T>& a, const NodePtr<T>& b) {
  const auto& sa = a->value.shape;
  const auto& sb = b->value.shape;
  if (sa.size() != 4 || sb.size() != 4 || sa[0] != sb[0] || sa[2] != sb[2] ||
      sa[3] != sb[3])
    throw ShapeError("concat_channels: incompatible shapes " + shape_str(sa) +
                     " and " + shape_str(sb));
  const int batch = sa[0], ca = sa[1], cb = sb[1], h = sa[2], w = sa[3];
  auto out = std::make_shared<Node<T>>();
  out->value = TensorT<T>({batch, ca + cb, h, w});
  const size_t plane = static_cast<size_t>(h) * w;
  for (int n = 0; n < batch; ++n) {
    std::copy_n(&a->value.data[n * ca * plane], ca * plane,
                &out->value.data[n * (ca + cb) * plane]);
    std::copy_n(&b->value.data[n * cb * plane], cb * plane,
                &out->value.data[n * (ca + cb) * plane + ca * plane]);
  }
  out->parents = {a, b};
  NodePtr<T> ap = a, bp = b;
  out->backward_op = [ap, bp, batch, ca, cb, plane](Node<T>& self) {
    ap->ensure_grad();
    bp->ensure_grad();
    for (int n = 0; n < batch; ++n) {
      const T* g = &self.grad.data[n * (ca + cb) * plane];
      T* ga = &ap->grad.data[n * ca * plane];
      T* gb = &bp->grad.data[n * cb * plane];
      for (size_t i = 0; i < ca * plane; ++i) ga[i] += g[i];
      for (size_t i = 0; i < cb * plane; ++i) gb[i] += g[ca * plane + i];
    }
  };
  return out;
}

// (B, C) feature broadcast to a (B, C, h, w) map.
template <typename T>
NodePtr<T> tile_spatial(const NodePtr<T>& x, int h, int w) {
  if (x->value.rank() != 2)
    throw ShapeError("tile_spatial expects a rank-2 input, got " +
                     shape_str(x->value.shape));
  const int batch = x->value.dim(0), ch = x->value.dim(1);
  auto out = std::make_shared<Node<T>>();
  out->value = TensorT<T>({batch, ch, h, w});
  for (int n = 0; n < batch; ++n)
    for (int c = 0; c < ch; ++c) {
      T v = x->value[n * ch + c];
      T* dst = &out->value.at4(n, c, 0, 0);
      std::fill_n(dst, static_cast<size_t>(h) * w, v);
    }
  out->parents = {x};
  NodePtr<T> xp = x;
  out->backward_op = [xp, batch, ch, h, w](Node<T>& self) {
    xp->ensure_grad();
    for (int n = 0; n < batch; ++n)
      for (int c = 0; c < ch; ++c) {
        const T* g = &self.grad.at4(n, c, 0, 0);
        T acc = T(0);
        for (size_t i = 0; i < static_cast<size_t>(h) * w; ++i) acc += g[i];
        xp->grad[n * ch + c] += acc;
      }
  };
  return out;
}

// ---- pooling / resampling --------------------------------------------

template <typename T>
NodePtr<T> max_pool2(const NodePtr<T>& x) {
  if (x->value.rank() != 4)
    throw ShapeError("max_pool2 expects a rank-4 input");
  const int batch = x->value.dim(0), ch = x->value.dim(1);
  const int h = x->value.dim(2), w = x->value.dim(3);
  const int oh = h / 2, ow = w / 2;
  if (oh == 0 || ow == 0) throw ShapeError("max_pool2: input too small");
  auto out = std::make_shared<Node<T>>();
  out->value = TensorT<T>({batch, ch, oh, ow});
  auto argmax = std::make_shared<std::vector<size_t>>(out->value.numel());
  size_t idx = 0;
  for (int n = 0; n < batch; ++n)
    for (int c = 0; c < ch; ++c)
      for (int i = 0; i < oh; ++i)
        for (int j = 0; j < ow; ++j, ++idx) {
          size_t best = 0;
          T best_v = -std::numeric_limits<T>::infinity();
          for (int di = 0; di < 2; ++di)
            for (int dj = 0; dj < 2; ++dj) {
              size_t src =
                  ((static_cast<size_t>(n) * ch + c) * h + 2 * i + di) * w +
                  2 * j + dj;
              if (x->value[src] > best_v) {
                best_v = x->value[src];
                best = src;
              }
            }
          out->value[idx] = best_v;
          (*argmax)[idx] = best;
        }
  out->parents = {x};
  NodePtr<T> xp = x;
  out->backward_op = [xp, argmax](Node<T>& self) {
    xp->ensure_grad();
    for (size_t i = 0; i < self.grad.numel(); ++i)
      xp->grad[(*argmax)[i]] += self.grad[i];
  };
  return out;
}

template <typename T>
NodePtr<T> upsample_nearest2(const NodePtr<T>& x) {
  if (x->value.rank() != 4)
    throw ShapeError("upsample_nearest2 expects a rank-4 input");
  const int batch = x->value.dim(0), ch = x->value.dim(1);
  const int h = x->value.dim(2), w = x->value.dim(3);
  auto out = std::make_shared<Node<T>>();
  out->value = TensorT<T>({batch, ch, 2 * h, 2 * w});
  for (int n = 0; n < batch; ++n)
    for (int c = 0; c < ch; ++c)
      for (int i = 0; i < 2 * h; ++i)
        for (int j = 0; j < 2 * w; ++j)
          out->value.at4(n, c, i, j) = x->value.at4(n, c, i / 2, j / 2);
  out->parents = {x};
  NodePtr<T> xp = x;
  out->backward_op = [xp, batch, ch, h, w](Node<T>& self) {
    xp->ensure_grad();
    for (int n = 0; n < batch; ++n)
      for (int c = 0; c < ch; ++c)
        for (int i = 0; i < 2 * h; ++i)
          for (int j = 0; j < 2 * w; ++j)
            xp->grad.at4(n, c, i / 2, j / 2) += self.grad.at4(n, c, i, j);
  };
  return out;
}

template <typename T>
NodePtr<T> global_avg_pool(const NodePtr<T>& x) {
  if (x->value.rank() != 4)
    throw ShapeError("global_avg_pool expects a rank-4 input");
  const int batch = x->value.dim(0), ch = x->value.dim(1);
  const size_t plane = static_cast<size_t>(x->value.dim(2)) * x->value.dim(3);
  auto out = std::make_shared<Node<T>>();
  out->value = TensorT<T>({batch, ch});
  for (int n = 0; n < batch; ++n)
    for (int c = 0; c < ch; ++c) {
      const T* src = &x->value.at4(n, c, 0, 0);
      T acc = T(0);
      for (size_t i = 0; i < plane; ++i) acc += src[i];
      out->value[n * ch + c] = acc / static_cast<T>(plane);
    }
  out->parents = {x};
  NodePtr<T> xp = x;
  out->backward_op = [xp, batch, ch, plane](Node<T>& self) {
    xp->ensure_grad();
    for (int n = 0; n < batch; ++n)
      for (int c = 0; c < ch; ++c) {
        T g = self.grad[n * ch + c] / static_cast<T>(plane);
        T* dst = &xp->grad.at4(n, c, 0, 0);
        for (size_t i = 0; i < plane; ++i) dst[i] += g;
      }
  };
  return out;
}

// Per-pixel L2 normalization across the channel dimension.
template <typename T>
NodePtr<T> normalize_channels(const NodePtr<T>& x, T eps = T(1e-8)) {
  if (x->value.rank() != 4)
    throw ShapeError("normalize_channels expects a rank-4 input");
  const int batch = x->value.dim(0), ch = x->value.dim(1);
  const int h = x->value.dim(2), w = x->value.dim(3);
  const size_t plane = static_cast<size_t>(h) * w;
  auto out = std::make_shared<Node<T>>();
  out->value = TensorT<T>(x->value.shape);
  auto norms = std::make_shared<std::vector<T>>(static_cast<size_t>(batch) * plane);
  for (int n = 0; n < batch; ++n)
    for (size_t p = 0; p < plane; ++p) {
      T sq = T(0);
      for (int c = 0; c < ch; ++c) {
        T v = x->value[(static_cast<size_t>(n) * ch + c) * plane + p];
        sq += v * v;
      }
      T norm = std::sqrt(sq) + eps;
      (*norms)[n * plane + p] = norm;
      for (int c = 0; c < ch; ++c) {
        size_t i = (static_cast<size_t>(n) * ch + c) * plane + p;
        out->value[i] = x->value[i] / norm;
      }
    }
  out->parents = {x};
  NodePtr<T> xp = x;
  out->backward_op = [xp, norms, batch, ch, plane](Node<T>& self) {
    xp->ensure_grad();
    for (int n = 0; n < batch; ++n)
      for (size_t p = 0; p < plane; ++p) {
        T norm = (*norms)[n * plane + p];
        // d(x/|x|) = (g - y * (y . g)) / |x|
        T dot = T(0);
        for (int c = 0; c < ch; ++c) {
          size_t i = (static_cast<size_t>(n) * ch + c) * plane + p;
          dot += self.value[i] * self.grad[i];
        }
        for (int c = 0; c < ch; ++c) {
          size_t i = (static_cast<size_t>(n) * ch + c) * plane + p;
          xp->grad[i] += (self.grad[i] - self.value[i] * dot) / norm;
        }
      }
  };
  return out;
}

// ---- dense / convolution ---------------------------------------------

// x: (B, F), w: (O, F), b: (O) -> (B, O)
template <typename T>
NodePtr<T> linear(const NodePtr<T>& x, const NodePtr<T>& w, const NodePtr<T>& b) {
  if (x->value.rank() != 2 || w->value.rank() != 2 || b->value.rank() != 1)
    throw ShapeError("linear: bad ranks");
  const int batch = x->value.dim(0), feat = x->value.dim(1);
  const int out_dim = w->value.dim(0);
  if (w->value.dim(1) != feat || b->value.dim(0) != out_dim)
    throw ShapeError("linear: weight " + shape_str(w->value.shape) +
                     " incompatible with input " + shape_str(x->value.shape));
  auto out = std::make_shared<Node<T>>();
  out->value = TensorT<T>({batch, out_dim});
  gemm(false, true, batch, out_dim, feat, T(1), x->value.data.data(), feat,
       w->value.data.data(), feat, T(0), out->value.data.data(), out_dim);
  for (int n = 0; n < batch; ++n)
    for (int o = 0; o < out_dim; ++o) out->value[n * out_dim + o] += b->value[o];
  out->parents = {x, w, b};
  NodePtr<T> xp = x, wp = w, bp = b;
  out->backward_op = [xp, wp, bp, batch, feat, out_dim](Node<T>& self) {
    xp->ensure_grad();
    wp->ensure_grad();
    bp->ensure_grad();
    // dx += dy * W
    gemm(false, false, batch, feat, out_dim, T(1), self.grad.data.data(),
         out_dim, wp->value.data.data(), feat, T(1), xp->grad.data.data(), feat);
    // dW += dy^T * x
    gemm(true, false, out_dim, feat, batch, T(1), self.grad.data.data(),
         out_dim, xp->value.data.data(), feat, T(1), wp->grad.data.data(), feat);
    for (int n = 0; n < batch; ++n)
      for (int o = 0; o < out_dim; ++o)
        bp->grad[o] += self.grad[n * out_dim + o];
  };
  return out;
}

namespace detail {

template <typename T>
void im2col(const TensorT<T>& x, int k, int stride, int pad, int oh, int ow,
            TensorT<T>& col) {
  const int batch = x.shape[0], ch = x.shape[1], h = x.shape[2], w = x.shape[3];
  const int cols = batch * oh * ow;
  for (int c = 0; c < ch; ++c)
    for (int ki = 0; ki < k; ++ki)
      for (int kj = 0; kj < k; ++kj) {
        size_t row = (static_cast<size_t>(c) * k + ki) * k + kj;
        T* dst = &col.data[row * cols];
        for (int n = 0; n < batch; ++n)
          for (int i = 0; i < oh; ++i) {
            int si = i * stride + ki - pad;
            for (int j = 0; j < ow; ++j) {
              int sj = j * stride + kj - pad;
              T v = T(0);
              if (si >= 0 && si < h && sj >= 0 && sj < w)
                v = x.at4(n, c, si, sj);
              dst[(static_cast<size_t>(n) * oh + i) * ow + j] = v;
            }
          }
      }
}

template <typename T>
void col2im_add(const TensorT<T>& col, int k, int stride, int pad, int oh,
                int ow, TensorT<T>& dx) {
  const int batch = dx.shape[0], ch = dx.shape[1], h = dx.shape[2], w = dx.shape[3];
  const int cols = batch * oh * ow;
  for (int c = 0; c < ch; ++c)
    for (int ki = 0; ki < k; ++ki)
      for (int kj = 0; kj < k; ++kj) {
        size_t row = (static_cast<size_t>(c) * k + ki) * k + kj;
        const T* src = &col.data[row * cols];
        for (int n = 0; n < batch; ++n)
          for (int i = 0; i < oh; ++i) {
            int si = i * stride + ki - pad;
            if (si < 0 || si >= h) continue;
            for (int j = 0; j < ow; ++j) {
              int sj = j * stride + kj - pad;
              if (sj < 0 || sj >= w) continue;
              dx.at4(n, c, si, sj) += src[(static_cast<size_t>(n) * oh + i) * ow + j];
            }
          }
      }
}

}  // namespace detail

// x: (B, C, H, W), w: (OC, C, K, K), b: (OC); zero padding.
// Forward/backward go through an im2col + GEMM fast path.
template <typename T>
NodePtr<T> conv2d(const NodePtr<T>& x, const NodePtr<T>& w, const NodePtr<T>& b,
                  int stride, int pad) {
  if (x->value.rank() != 4 || w->value.rank() != 4 || b->value.rank() != 1)
    throw ShapeError("conv2d: bad ranks");
  const int batch = x->value.dim(0), ch = x->value.dim(1);
  const int h = x->value.dim(2), wd = x->value.dim(3);
  const int oc = w->value.dim(0), k = w->value.dim(2);
  if (w->value.dim(1) != ch || w->value.dim(3) != k || b->value.dim(0) != oc)
    throw ShapeError("conv2d: weight " + shape_str(w->value.shape) +
                     " incompatible with input " + shape_str(x->value.shape));
  const int oh = (h + 2 * pad - k) / stride + 1;
  const int ow = (wd + 2 * pad - k) / stride + 1;
  if (oh <= 0 || ow <= 0) throw ShapeError("conv2d: output would be empty");

  const int kk = ch * k * k;
  const int cols = batch * oh * ow;
  auto col = std::make_shared<TensorT<T>>(std::vector<int>{kk, cols});
  detail::im2col(x->value, k, stride, pad, oh, ow, *col);

  // y (oc, cols) = w (oc, kk) * col
  TensorT<T> y({oc, cols});
  gemm(false, false, oc, cols, kk, T(1), w->value.data.data(), kk,
       col->data.data(), cols, T(0), y.data.data(), cols);

  auto out = std::make_shared<Node<T>>();
  out->value = TensorT<T>({batch, oc, oh, ow});
  const size_t plane = static_cast<size_t>(oh) * ow;
  for (int n = 0; n < batch; ++n)
    for (int c = 0; c < oc; ++c) {
      const T* src = &y.data[static_cast<size_t>(c) * cols + n * plane];
      T* dst = &out->value.at4(n, c, 0, 0);
      T bias = b->value[c];
      for (size_t i = 0; i < plane; ++i) dst[i] = src[i] + bias;
    }

  out->parents = {x, w, b};
  NodePtr<T> xp = x, wp = w, bp = b;
  out->backward_op = [xp, wp, bp, col, k, stride, pad, oh, ow, oc, kk, cols,
                      batch, plane](Node<T>& self) {
    xp->ensure_grad();
    wp->ensure_grad();
    bp->ensure_grad();
    // regroup dout into (oc, cols)
    TensorT<T> dy({oc, cols});
    for (int n = 0; n < batch; ++n)
      for (int c = 0; c < oc; ++c) {
        const T* src = &self.grad.at4(n, c, 0, 0);
        T* dst = &dy.data[static_cast<size_t>(c) * cols + n * plane];
        std::copy_n(src, plane, dst);
      }
    for (int c = 0; c < oc; ++c) {
      const T* src = &dy.data[static_cast<size_t>(c) * cols];
      T acc = T(0);
      for (int i = 0; i < cols; ++i) acc += src[i];
      bp->grad[c] += acc;
    }
    // dW += dy * col^T
    gemm(false, true, oc, kk, cols, T(1), dy.data.data(), cols,
         col->data.data(), cols, T(1), wp->grad.data.data(), kk);
    // dcol = w^T * dy, then scatter back
    TensorT<T> dcol({kk, cols});
    gemm(true, false, kk, cols, oc, T(1), wp->value.data.data(), kk,
         dy.data.data(), cols, T(0), dcol.data.data(), cols);
    detail::col2im_add(dcol, k, stride, pad, oh, ow, xp->grad);
  };
  return out;
}

// ---- losses ------------------------------------------------------------

// logits: (B, K); mean cross-entropy over the batch.
template <typename T>
NodePtr<T> softmax_cross_entropy(const NodePtr<T>& logits,
                                 const std::vector<int>& labels) {
  if (logits->value.rank() != 2)
    throw ShapeError("softmax_cross_entropy expects rank-2 logits");
  const int batch = logits->value.dim(0), k = logits->value.dim(1);
  if (static_cast<int>(labels.size()) != batch)
    throw ShapeError("softmax_cross_entropy: label count mismatch");
  auto probs = std::make_shared<TensorT<T>>(std::vector<int>{batch, k});
  T loss = T(0);
  for (int n = 0; n < batch; ++n) {
    const T* row = &logits->value[static_cast<size_t>(n) * k];
    T mx = row[0];
    for (int j = 1; j < k; ++j) mx = std::max(mx, row[j]);
    T denom = T(0);
    for (int j = 0; j < k; ++j) denom += std::exp(row[j] - mx);
    for (int j = 0; j < k; ++j)
      (*probs)[static_cast<size_t>(n) * k + j] = std::exp(row[j] - mx) / denom;
    int y = labels[n];
    if (y < 0 || y >= k) throw ShapeError("softmax_cross_entropy: bad label");
    loss -= std::log(std::max((*probs)[static_cast<size_t>(n) * k + y], T(1e-30)));
  }
  auto out = std::make_shared<Node<T>>();
  out->value = TensorT<T>({1});
  out->value[0] = loss / static_cast<T>(batch);
  out->parents = {logits};
  NodePtr<T> lp = logits;
  auto labels_copy = std::make_shared<std::vector<int>>(labels);
  out->backward_op = [lp, probs, labels_copy, batch, k](Node<T>& self) {
    lp->ensure_grad();
    T g = self.grad[0] / static_cast<T>(batch);
    for (int n = 0; n < batch; ++n)
      for (int j = 0; j < k; ++j) {
        T delta = (j == (*labels_copy)[n]) ? T(1) : T(0);
        lp->grad[static_cast<size_t>(n) * k + j] +=
            g * ((*probs)[static_cast<size_t>(n) * k + j] - delta);
      }
  };
  return out;
}

// Mean |pred - target| over elements where mask != 0 (empty mask = all).
template <typename T>
NodePtr<T> l1_loss(const NodePtr<T>& pred, const TensorT<T>& target,
                   const std::vector<uint8_t>& mask = {}) {
  if (pred->value.shape != target.shape)
    throw ShapeError("l1_loss: pred " + shape_str(pred->value.shape) +
                     " vs target " + shape_str(target.shape));
  const size_t n = pred->value.numel();
  if (!mask.empty() && mask.size() != n)
    throw ShapeError("l1_loss: mask size mismatch");
  size_t count = 0;
  T loss = T(0);
  for (size_t i = 0; i < n; ++i) {
    if (!mask.empty() && !mask[i]) continue;
    loss += std::abs(pred->value[i] - target.data[i]);
    ++count;
  }
  if (count == 0) throw ShapeError("l1_loss: empty mask");
  auto out = std::make_shared<Node<T>>();
  out->value = TensorT<T>({1});
  out->value[0] = loss / static_cast<T>(count);
  out->parents = {pred};
  NodePtr<T> pp = pred;
  auto target_copy = std::make_shared<TensorT<T>>(target);
  auto mask_copy = std::make_shared<std::vector<uint8_t>>(mask);
  out->backward_op = [pp, target_copy, mask_copy, count, n](Node<T>& self) {
    pp->ensure_grad();
    T g = self.grad[0] / static_cast<T>(count);
    for (size_t i = 0; i < n; ++i) {
      if (!mask_copy->empty() && !(*mask_copy)[i]) continue;
      T d = pp->value[i] - target_copy->data[i];
      pp->grad[i] += d > T(0) ? g : (d < T(0) ? -g : T(0));
    }
  };
  return out;
}

// pred: (B, C, H, W) unit vectors, target likewise; mean (1 - p.t) over
// pixels where mask != 0. mask has one entry per (b, h, w).
template <typename T>
NodePtr<T> cosine_loss(const NodePtr<T>& pred, const TensorT<T>& target,
                       const std::vector<uint8_t>& mask) {
  if (pred->value.shape != target.shape)
    throw ShapeError("cosine_loss: shape mismatch");
  const int batch = pred->value.dim(0), ch = pred->value.dim(1);
  const size_t plane = static_cast<size_t>(pred->value.dim(2)) * pred->value.dim(3);
  if (mask.size() != static_cast<size_t>(batch) * plane)
    throw ShapeError("cosine_loss: mask size mismatch");
  size_t count = 0;
  T loss = T(0);
  for (int n = 0; n < batch; ++n)
    for (size_t p = 0; p < plane; ++p) {
      if (!mask[n * plane + p]) continue;
      T dot = T(0);
      for (int c = 0; c < ch; ++c) {
        size_t i = (static_cast<size_t>(n) * ch + c) * plane + p;
        dot += pred->value[i] * target.data[i];
      }
      loss += T(1) - dot;
      ++count;
    }
  if (count == 0) throw ShapeError("cosine_loss: empty mask");
  auto out = std::make_shared<Node<T>>();
  out->value = TensorT<T>({1});
  out->value[0] = loss / static_cast<T>(count);
  out->parents = {pred};
  NodePtr<T> pp = pred;
  auto target_copy = std::make_shared<TensorT<T>>(target);
  auto mask_copy = std::make_shared<std::vector<uint8_t>>(mask);
  out->backward_op = [pp, target_copy, mask_copy, count, batch, ch,
                      plane](Node<T>& self) {
    pp->ensure_grad();
    T g = self.grad[0] / static_cast<T>(count);
    for (int n = 0; n < batch; ++n)
      for (size_t p = 0; p < plane; ++p) {
        if (!(*mask_copy)[n * plane + p]) continue;
        for (int c = 0; c < ch; ++c) {
          size_t i = (static_cast<size_t>(n) * ch + c) * plane + p;
          pp->grad[i] -= g * target_copy->data[i];
        }
      }
  };
  return out;
}

// Sum of all elements, handy for tests.
template <typename T>
NodePtr<T> sum(const NodePtr<T>& x) {
  auto out = std::make_shared<Node<T>>();
  out->value = TensorT<T>({1});
  T acc = T(0);
  for (size_t i = 0; i < x->value.numel(); ++i) acc += x->value[i];
  out->value[0] = acc;
  out->parents = {x};
  NodePtr<T> xp = x;
  out->backward_op = [xp](Node<T>& self) {
    xp->ensure_grad();
    for (size_t i = 0; i < xp->grad.numel(); ++i) xp->grad[i] += self.grad[0];
  };
  return out;
}

// Weighted sum, used by the finite-difference harness to reduce any
// output to a scalar.
template <typename T>
NodePtr<T> weighted_sum(const NodePtr<T>& x, const TensorT<T>& weights) {
  if (x->value.shape != weights.shape)
    throw ShapeError("weighted_sum: shape mismatch");
  auto out = std::make_shared<Node<T>>();
  out->value = TensorT<T>({1});
  T acc = T(0);
  for (size_t i = 0; i < x->value.numel(); ++i)
    acc += x->value[i] * weights.data[i];
  out->value[0] = acc;
  out->parents = {x};
  NodePtr<T> xp = x;
  auto w_copy = std::make_shared<TensorT<T>>(weights);
  out->backward_op = [xp, w_copy](Node<T>& self) {
    xp->ensure_grad();
    for (size_t i = 0; i < xp->grad.numel(); ++i)
      xp->grad[i] += self.grad[0] * w_copy->data[i];
  };
  return out;
}

}  // namespace ve
