#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "eppnet/checkpoint.hpp"
#include "eppnet/error.hpp"
#include "eppnet/gradcheck.hpp"
#include "eppnet/ops.hpp"
#include "eppnet/optim.hpp"
#include "eppnet/rng.hpp"

using namespace eppnet;

TEST_CASE("matmul: identity and triple-loop oracle") {
  Rng rng(1);
  Tensor eye({4, 4});
  for (int i = 0; i < 4; ++i) eye.at(i, i) = 1.0f;
  const Tensor x = Tensor::random_uniform({4, 4}, rng);
  CHECK(tensors_equal(matmul(eye, x), x));

  const Tensor a = Tensor::random_uniform({5, 4}, rng);
  const Tensor b = Tensor::random_uniform({4, 3}, rng);
  const Tensor c = matmul(a, b);
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 3; ++j) {
      double acc = 0.0;
      for (int k = 0; k < 4; ++k)
        acc += static_cast<double>(a.at(i, k)) * b.at(k, j);
      CHECK(c.at(i, j) == doctest::Approx(acc).epsilon(1e-6));
    }
}

TEST_CASE("conv2d: 1x1 unit kernel is the identity") {
  Rng rng(2);
  const Tensor x = Tensor::random_uniform({1, 5, 6}, rng);
  Tensor k({1, 1, 1, 1});
  k[0] = 1.0f;
  CHECK(tensors_equal(conv2d(x, k, 1, 0), x));
}

TEST_CASE("conv2d matches a direct nested-loop oracle") {
  Rng rng(3);
  const Tensor x = Tensor::random_uniform({2, 6, 5}, rng);
  const Tensor k = Tensor::random_uniform({3, 2, 3, 3}, rng);
  const int stride = 2, pad = 1;
  const Tensor y = conv2d(x, k, stride, pad);
  REQUIRE(y.shape == std::vector<int>{3, 3, 3});
  for (int co = 0; co < 3; ++co)
    for (int oh = 0; oh < 3; ++oh)
      for (int ow = 0; ow < 3; ++ow) {
        double acc = 0.0;
        for (int ci = 0; ci < 2; ++ci)
          for (int kh = 0; kh < 3; ++kh)
            for (int kw = 0; kw < 3; ++kw) {
              const int ih = oh * stride + kh - pad;
              const int iw = ow * stride + kw - pad;
              if (ih < 0 || ih >= 6 || iw < 0 || iw >= 5) continue;
              acc += static_cast<double>(x.at(ci, ih, iw)) *
                     k.at(co, ci, kh, kw);
            }
        CHECK(y.at(co, oh, ow) == doctest::Approx(acc).epsilon(1e-5));
      }
}

TEST_CASE("pointwise op examples") {
  Tensor x({1, 2, 2}, {-1.0f, 2.0f, 3.0f, 4.0f});
  const Tensor r = relu(x);
  CHECK(r[0] == 0.0f);
  CHECK(r[1] == 2.0f);

  Tensor grid({1, 2, 2}, {1.0f, 2.0f, 3.0f, 4.0f});
  const Tensor pooled = max_pool2(grid);
  REQUIRE(pooled.shape == std::vector<int>{1, 1, 1});
  CHECK(pooled[0] == 4.0f);

  const Tensor c = Tensor::full({3, 4, 4}, 2.5f);
  const Tensor gap = global_avg_pool(c);
  for (int i = 0; i < 3; ++i) CHECK(gap[i] == doctest::Approx(2.5f));
}

TEST_CASE("cross entropy: uniform logits and double-precision oracle") {
  const Tensor uniform({1, 4});
  const auto r = softmax_cross_entropy(uniform, {2});
  CHECK(r.loss == doctest::Approx(std::log(4.0)).epsilon(1e-6));

  Rng rng(4);
  const Tensor logits = Tensor::random_uniform({3, 5}, rng, -3.0f, 3.0f);
  const std::vector<int> labels = {0, 4, 2};
  const auto res = softmax_cross_entropy(logits, labels);
  double ref = 0.0;
  for (int i = 0; i < 3; ++i) {
    double denom = 0.0;
    for (int j = 0; j < 5; ++j) denom += std::exp(static_cast<double>(logits.at(i, j)));
    ref -= std::log(std::exp(static_cast<double>(
               logits.at(i, labels[static_cast<size_t>(i)]))) / denom);
  }
  CHECK(res.loss == doctest::Approx(ref / 3.0).epsilon(1e-6));
  // gradient rows sum to zero (softmax minus one-hot)
  for (int i = 0; i < 3; ++i) {
    double row = 0.0;
    for (int j = 0; j < 5; ++j) row += res.grad.at(i, j);
    CHECK(row == doctest::Approx(0.0).epsilon(1e-6));
  }
  CHECK_THROWS_AS(softmax_cross_entropy(logits, {0, 1, 9}), Error);
}

// Central differences with eps=1e-3 are invalid for fixtures sitting
// within eps of a relu or max-pool kink, so kink-sensitive cases redraw
// the fixture a few times; a genuine gradient bug fails every draw.
TEST_CASE("gradient checks for every op") {
  Rng rng(5);
  double worst = 0.0;
  int redraws = 0;
  for (int trial = 0; trial < 10; ++trial) {
    // matmul wrt a
    const Tensor b = Tensor::random_uniform({4, 3}, rng);
    ScalarFn f_mm = [&](const Tensor& a, Tensor* g) {
      const Tensor y = matmul(a, b);
      double s = 0.0;
      for (long i = 0; i < y.numel(); ++i) s += y[i];
      if (g) {
        Tensor d_y = Tensor::full(y.shape, 1.0f);
        Tensor d_b(b.shape);
        matmul_backward(d_y, a, b, *g, d_b);
      }
      return s;
    };
    worst = std::max(worst,
                     grad_check(f_mm, Tensor::random_uniform({5, 4}, rng), 1e-3));

    // relu masking on a fixture bounded away from the kink at zero
    ScalarFn f_relu = [&](const Tensor& x, Tensor* g) {
      const Tensor y = relu(x);
      double s = 0.0;
      for (long i = 0; i < y.numel(); ++i) s += y[i] * (i % 3 + 1);
      if (g) {
        Tensor d_y(y.shape);
        for (long i = 0; i < y.numel(); ++i) d_y[i] = static_cast<float>(i % 3 + 1);
        relu_backward(d_y, x, *g);
      }
      return s;
    };
    Tensor xr({1, 2, 3});
    for (long i = 0; i < xr.numel(); ++i)
      xr[i] = 0.3f * static_cast<float>(i - 3) + (i >= 3 ? 0.3f : 0.0f);
    worst = std::max(worst, grad_check(f_relu, xr, 1e-3));

    // max-pool routing on a fixture with well-separated window entries
    ScalarFn f_pool = [&](const Tensor& x, Tensor* g) {
      const Tensor y = max_pool2(x);
      double s = 0.0;
      for (long i = 0; i < y.numel(); ++i) s += y[i] * (i + 1);
      if (g) {
        Tensor d_y(y.shape);
        for (long i = 0; i < y.numel(); ++i) d_y[i] = static_cast<float>(i + 1);
        max_pool2_backward(d_y, x, *g);
      }
      return s;
    };
    Tensor xp({2, 4, 4});
    {
      Rng shuffle_rng(100 + static_cast<uint64_t>(trial));
      std::vector<float> levels;
      for (long i = 0; i < xp.numel(); ++i)
        levels.push_back(0.1f * static_cast<float>(i));
      for (size_t i = levels.size(); i > 1; --i)
        std::swap(levels[i - 1], levels[shuffle_rng.next_below(i)]);
      for (long i = 0; i < xp.numel(); ++i) xp[i] = levels[static_cast<size_t>(i)];
    }
    worst = std::max(worst, grad_check(f_pool, xp, 1e-3));

    // conv wrt x, composed with relu/pool/gap; positive inputs and kernel
    // keep every pre-activation away from the relu kink
    const Tensor kk = Tensor::random_uniform({2, 2, 3, 3}, rng, 0.05f, 0.45f);
    ScalarFn f_conv = [&](const Tensor& x, Tensor* g) {
      const Tensor z = conv2d(x, kk, 1, 1);
      const Tensor r = relu(z);
      const Tensor p = max_pool2(r);
      const Tensor gap = global_avg_pool(p);
      double s = 0.0;
      for (long i = 0; i < gap.numel(); ++i) s += gap[i] * (i + 1);
      if (g) {
        Tensor d_gap(gap.shape);
        for (long i = 0; i < gap.numel(); ++i) d_gap[i] = static_cast<float>(i + 1);
        Tensor d_p(p.shape);
        global_avg_pool_backward(d_gap, p, d_p);
        Tensor d_r(r.shape);
        max_pool2_backward(d_p, r, d_r);
        Tensor d_z(z.shape);
        relu_backward(d_r, z, d_z);
        Tensor d_k(kk.shape);
        conv2d_backward(d_z, x, kk, 1, 1, *g, d_k);
      }
      return s;
    };
    double conv_err = 1.0;
    for (int draw = 0; draw < 8 && conv_err >= 1e-3; ++draw) {
      conv_err = grad_check(
          f_conv, Tensor::random_uniform({2, 6, 6}, rng, 0.25f, 1.0f), 1e-3);
      if (conv_err >= 1e-3) ++redraws;
    }
    worst = std::max(worst, conv_err);

    // bias add
    const Tensor xb = Tensor::random_uniform({3, 4, 4}, rng);
    ScalarFn f_bias = [&](const Tensor& bias, Tensor* g) {
      const Tensor y = add_channel_bias(xb, bias);
      double s = 0.0;
      for (long i = 0; i < y.numel(); ++i) s += y[i] * y[i];
      if (g) {
        Tensor d_y(y.shape);
        for (long i = 0; i < y.numel(); ++i) d_y[i] = 2.0f * y[i];
        Tensor d_x(xb.shape);
        add_channel_bias_backward(d_y, d_x, *g);
      }
      return s;
    };
    worst = std::max(worst, grad_check(f_bias, Tensor::random_uniform({3}, rng), 1e-3));

    // cross entropy wrt logits
    ScalarFn f_ce = [&](const Tensor& logits, Tensor* g) {
      const auto r = softmax_cross_entropy(logits, {1, 3});
      if (g) *g += r.grad;
      return static_cast<double>(r.loss);
    };
    worst = std::max(
        worst, grad_check(f_ce, Tensor::random_uniform({2, 5}, rng, -2.0f, 2.0f),
                          1e-3));
  }
  CHECK(worst < 1e-3);
  CHECK(redraws < 40);  // systematic errors would exhaust every draw
}

TEST_CASE("grad check of a constant function is exact") {
  ScalarFn f = [](const Tensor&, Tensor*) { return 3.5; };
  Rng rng(6);
  CHECK(grad_check(f, Tensor::random_uniform({4}, rng), 1e-3) == 0.0);
}

TEST_CASE("sgd momentum: hand-iterated two-step example") {
  // w0=1, grad=2 both steps, lr=0.1, momentum=0.9, no decay
  // v1=-0.2, w1=0.8; v2=0.9*(-0.2)-0.1*1.6=-0.34, w2=0.46
  Parameter p("w", Tensor({1}, {1.0f}));
  OptimizerConfig cfg;
  cfg.learning_rate = 0.1f;
  cfg.momentum = 0.9f;
  cfg.weight_decay = 0.0f;
  std::vector<Parameter*> params = {&p};
  p.grad[0] = 2.0f;
  sgd_step(params, cfg, 0);
  CHECK(p.value[0] == doctest::Approx(0.8).epsilon(1e-6));
  CHECK(p.grad[0] == 0.0f);  // zeroed after the step
  p.grad[0] = 1.6f;
  sgd_step(params, cfg, 0);
  CHECK(p.velocity[0] == doctest::Approx(-0.34).epsilon(1e-6));
  CHECK(p.value[0] == doctest::Approx(0.46).epsilon(1e-6));
}

TEST_CASE("learning-rate schedule multiplies every reached milestone") {
  OptimizerConfig cfg;
  cfg.learning_rate = 0.1f;
  cfg.schedule = {{35, 0.1f}, {55, 0.1f}};
  CHECK(effective_learning_rate(cfg, 0) == doctest::Approx(0.1));
  CHECK(effective_learning_rate(cfg, 34) == doctest::Approx(0.1));
  CHECK(effective_learning_rate(cfg, 35) == doctest::Approx(0.01));
  CHECK(effective_learning_rate(cfg, 55) == doctest::Approx(0.001));
  CHECK(effective_learning_rate(cfg, 90) == doctest::Approx(0.001));
}

TEST_CASE("weight decay pulls weights toward zero") {
  Parameter p("w", Tensor({1}, {1.0f}));
  OptimizerConfig cfg;
  cfg.learning_rate = 0.1f;
  cfg.momentum = 0.0f;
  cfg.weight_decay = 0.5f;
  std::vector<Parameter*> params = {&p};
  sgd_step(params, cfg, 0);  // grad 0: update is -lr*wd*w = -0.05
  CHECK(p.value[0] == doctest::Approx(0.95).epsilon(1e-6));
}

TEST_CASE("checkpoint round trip preserves names, shapes, bits") {
  Rng rng(7);
  NamedTensors tensors;
  tensors.emplace_back("alpha", Tensor::random_uniform({2, 3}, rng));
  tensors.emplace_back("beta", Tensor::random_uniform({4}, rng));
  tensors.emplace_back("gamma", Tensor::random_uniform({2, 2, 2, 2}, rng));
  const std::string path = "/tmp/eppnet_test_ckpt.bin";
  save_checkpoint(path, tensors);
  const NamedTensors back = load_checkpoint(path);
  REQUIRE(back.size() == 3);
  for (size_t i = 0; i < 3; ++i) {
    CHECK(back[i].first == tensors[i].first);
    CHECK(tensors_equal(back[i].second, tensors[i].second));
  }
  CHECK(find_tensor(back, "beta") != nullptr);
  CHECK(find_tensor(back, "nope") == nullptr);
  std::filesystem::remove(path);
}

TEST_CASE("corrupt checkpoint magic is rejected") {
  const std::string path = "/tmp/eppnet_test_ckpt_bad.bin";
  {
    std::ofstream os(path, std::ios::binary);
    os << "NOPE";
  }
  CHECK_THROWS_AS(load_checkpoint(path), Error);
  std::filesystem::remove(path);
}

TEST_CASE("splitmix64 stream is platform-stable") {
  Rng rng(0);
  CHECK(rng.next_u64() == 0xe220a8397b1dcdafULL);
  CHECK(rng.next_u64() == 0x6e789e6aa1b965f4ULL);
}
