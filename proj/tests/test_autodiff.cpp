#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"
#include "ve/gradcheck.hpp"

using namespace ve;

namespace {

// O(n^4) direct-loop convolution, written independently of the im2col path.
TensorF conv_oracle(const TensorF& x, const TensorF& w, const TensorF& b,
                    int stride, int pad) {
  const int B = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  const int OC = w.dim(0), K = w.dim(2);
  const int OH = (H + 2 * pad - K) / stride + 1;
  const int OW = (W + 2 * pad - K) / stride + 1;
  TensorF y({B, OC, OH, OW});
  for (int n = 0; n < B; ++n)
    for (int oc = 0; oc < OC; ++oc)
      for (int oh = 0; oh < OH; ++oh)
        for (int ow = 0; ow < OW; ++ow) {
          double acc = b.data[oc];
          for (int c = 0; c < C; ++c)
            for (int ki = 0; ki < K; ++ki)
              for (int kj = 0; kj < K; ++kj) {
                int ih = oh * stride - pad + ki;
                int iw = ow * stride - pad + kj;
                if (ih < 0 || ih >= H || iw < 0 || iw >= W) continue;
                acc += static_cast<double>(x.at4(n, c, ih, iw)) *
                       w.data[((oc * C + c) * K + ki) * K + kj];
              }
          y.at4(n, oc, oh, ow) = static_cast<float>(acc);
        }
  return y;
}

TensorF random_f(std::vector<int> shape, Pcg32& rng) {
  TensorF t(std::move(shape));
  for (auto& v : t.data) v = static_cast<float>(rng.normal());
  return t;
}

}  // namespace

TEST_CASE("every catalog layer passes finite-difference checks") {
  auto results = run_gradchecks(5, 1e-4);
  CHECK(results.size() >= 18);
  for (const auto& r : results) {
    INFO(r.name << " max_err " << r.max_err);
    CHECK(r.ok);
  }
}

TEST_CASE("conv2d matches the direct-loop oracle") {
  Pcg32 rng(31);
  struct Cfg {
    std::vector<int> xs, ws;
    int stride, pad;
  };
  for (const Cfg& c : {Cfg{{2, 3, 8, 8}, {5, 3, 3, 3}, 1, 1},
                       Cfg{{2, 3, 8, 8}, {4, 3, 4, 4}, 2, 1},
                       Cfg{{1, 2, 6, 6}, {3, 2, 3, 3}, 2, 1}}) {
    TensorF x = random_f(c.xs, rng);
    TensorF w = random_f(c.ws, rng);
    TensorF b = random_f({c.ws[0]}, rng);
    auto y = conv2d(make_leaf(x, false), make_leaf(w, false),
                    make_leaf(b, false), c.stride, c.pad);
    TensorF expect = conv_oracle(x, w, b, c.stride, c.pad);
    REQUIRE(y->value.shape == expect.shape);
    for (size_t i = 0; i < expect.numel(); ++i)
      CHECK(std::abs(y->value[i] - expect[i]) < 1e-5);
  }
}

TEST_CASE("identity 1x1 conv reproduces its input") {
  Pcg32 rng(32);
  TensorF x = random_f({1, 1, 5, 5}, rng);
  TensorF w({1, 1, 1, 1});
  w.data[0] = 1.0f;
  TensorF b({1});
  auto y = conv2d(make_leaf(x, false), make_leaf(w, false),
                  make_leaf(b, false), 1, 0);
  CHECK(y->value.shape == x.shape);
  for (size_t i = 0; i < x.numel(); ++i) CHECK(y->value[i] == x[i]);
}

TEST_CASE("hand-computed 3x3 ones convolution") {
  TensorF x({1, 1, 4, 4});
  x.fill(1.0f);
  TensorF w({1, 1, 3, 3});
  w.fill(1.0f);
  TensorF b({1});
  auto y = conv2d(make_leaf(x, false), make_leaf(w, false),
                  make_leaf(b, false), 1, 1);
  auto at = [&](int i, int j) { return y->value.at4(0, 0, i, j); };
  CHECK(at(0, 0) == 4.0f);
  CHECK(at(0, 3) == 4.0f);
  CHECK(at(3, 0) == 4.0f);
  CHECK(at(3, 3) == 4.0f);
  CHECK(at(0, 1) == 6.0f);
  CHECK(at(2, 0) == 6.0f);
  CHECK(at(1, 1) == 9.0f);
  CHECK(at(2, 2) == 9.0f);
}

TEST_CASE("leaky relu values") {
  TensorF x({2});
  x.data = {-1.0f, 2.0f};
  auto y = leaky_relu(make_leaf(x, false), 0.2f);
  CHECK(y->value[0] == doctest::Approx(-0.2f));
  CHECK(y->value[1] == doctest::Approx(2.0f));
}

TEST_CASE("sum backward is all ones") {
  Pcg32 rng(33);
  auto x = make_leaf(random_f({3, 4}, rng), true);
  auto loss = sum(x);
  backward(loss);
  for (size_t i = 0; i < x->grad.numel(); ++i)
    CHECK(x->grad[i] == doctest::Approx(1.0f));
}

TEST_CASE("fully-connected layer with L1 loss matches the closed form") {
  // y = w x + b, L = mean |y - t|  =>  dL/dw_ij = sign(y_i - t_i) x_j / O
  Pcg32 rng(34);
  TensorF xv = random_f({1, 3}, rng);
  TensorF wv = random_f({2, 3}, rng);
  TensorF bv = random_f({2}, rng);
  TensorF tv = random_f({1, 2}, rng);
  auto x = make_leaf(xv, true);
  auto w = make_leaf(wv, true);
  auto b = make_leaf(bv, true);
  auto y = linear(x, w, b);
  auto loss = l1_loss(y, tv);
  backward(loss);
  for (int i = 0; i < 2; ++i) {
    double yi = bv.data[i];
    for (int j = 0; j < 3; ++j) yi += wv.data[i * 3 + j] * xv.data[j];
    double s = yi > tv.data[i] ? 1.0 : -1.0;
    for (int j = 0; j < 3; ++j)
      CHECK(w->grad[i * 3 + j] ==
            doctest::Approx(s * xv.data[j] / 2.0).epsilon(1e-5));
    CHECK(b->grad[i] == doctest::Approx(s / 2.0).epsilon(1e-5));
  }
}

TEST_CASE("backward requires a scalar loss") {
  Pcg32 rng(35);
  auto x = make_leaf(random_f({2, 2}, rng), true);
  auto y = relu(x);
  CHECK_THROWS(backward(y));
}

TEST_CASE("forward is deterministic bitwise") {
  Pcg32 rng(36);
  TensorF xv = random_f({2, 3, 8, 8}, rng);
  TensorF wv = random_f({4, 3, 3, 3}, rng);
  TensorF bv = random_f({4}, rng);
  auto run = [&]() {
    auto y = relu(conv2d(make_leaf(xv, false), make_leaf(wv, false),
                         make_leaf(bv, false), 1, 1));
    return y->value.data;
  };
  CHECK(run() == run());
}

TEST_CASE("repeated backward after re-forward gives identical grads") {
  Pcg32 rng(37);
  TensorF xv = random_f({2, 4}, rng);
  TensorF wv = random_f({3, 4}, rng);
  TensorF bv = random_f({3}, rng);
  TensorF tv = random_f({2, 3}, rng);
  std::vector<float> first;
  for (int rep = 0; rep < 2; ++rep) {
    auto w = make_leaf(wv, true);
    auto loss = l1_loss(linear(make_leaf(xv, false), w, make_leaf(bv, false)),
                        tv);
    backward(loss);
    if (rep == 0)
      first = w->grad.data;
    else
      CHECK(w->grad.data == first);
  }
}

TEST_CASE("adam zero gradient leaves parameters unchanged") {
  ParamStore<float> store;
  Pcg32 rng(38);
  auto p = store.add("p", random_f({4}, rng));
  auto before = p->value.data;
  p->ensure_grad();
  Adam<float> adam;
  adam.step(store);
  CHECK(p->value.data == before);
}

TEST_CASE("adam first step approximates -lr * sign(g)") {
  ParamStore<float> store;
  TensorF init({2});
  init.data = {1.0f, -2.0f};
  auto p = store.add("p", init);
  p->ensure_grad();
  p->grad[0] = 0.5f;
  p->grad[1] = -0.03f;
  AdamConfig cfg;
  Adam<float> adam(cfg);
  adam.step(store);
  // bias-corrected first step: lr * g / (|g| + eps') ~ lr * sign(g)
  CHECK(p->value[0] == doctest::Approx(1.0f - cfg.lr).epsilon(1e-4));
  CHECK(p->value[1] == doctest::Approx(-2.0f + cfg.lr).epsilon(1e-4));
  CHECK(adam.step_count() == 1);
}

TEST_CASE("adam moves monotonically against a constant gradient") {
  ParamStore<float> store;
  TensorF init({1});
  init.data = {0.7f};
  auto p = store.add("p", init);
  Adam<float> adam;
  float prev = p->value[0];
  for (int i = 0; i < 5; ++i) {
    p->zero_grad();
    p->ensure_grad();
    p->grad[0] = 1.0f;
    adam.step(store);
    CHECK(p->value[0] < prev);
    prev = p->value[0];
  }
}

TEST_CASE("shape mismatches raise descriptive errors") {
  Pcg32 rng(39);
  auto x = make_leaf(random_f({2, 3}, rng), false);
  auto w = make_leaf(random_f({4, 5}, rng), false);
  auto b = make_leaf(random_f({4}, rng), false);
  CHECK_THROWS_AS(linear(x, w, b), ShapeError);
  auto img = make_leaf(random_f({1, 3, 4, 4}, rng), false);
  auto kern = make_leaf(random_f({2, 5, 3, 3}, rng), false);
  auto kb = make_leaf(random_f({2}, rng), false);
  CHECK_THROWS_AS(conv2d(img, kern, kb, 1, 1), ShapeError);
}
