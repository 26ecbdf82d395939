#pragma once

#include <vector>

#include "eppnet/tensor.hpp"

namespace eppnet {

// Forward ops with explicit reverse-mode companions. Backward functions
// accumulate into their output gradients so minibatch grads sum naturally.

// a [m,k] x b [k,n] -> [m,n]
Tensor matmul(const Tensor& a, const Tensor& b);
void matmul_backward(const Tensor& d_out, const Tensor& a, const Tensor& b,
                     Tensor& d_a, Tensor& d_b);

// x [C_in,H,W], k [C_out,C_in,kh,kw]; cross-correlation convention.
Tensor conv2d(const Tensor& x, const Tensor& k, int stride, int pad);
void conv2d_backward(const Tensor& d_out, const Tensor& x, const Tensor& k,
                     int stride, int pad, Tensor& d_x, Tensor& d_k);

Tensor relu(const Tensor& x);
void relu_backward(const Tensor& d_out, const Tensor& x, Tensor& d_x);

// 2x2 stride-2 max over the trailing two axes of [C,H,W].
Tensor max_pool2(const Tensor& x);
void max_pool2_backward(const Tensor& d_out, const Tensor& x, Tensor& d_x);

// [C,H,W] -> [C], mean over the spatial axes.
Tensor global_avg_pool(const Tensor& x);
void global_avg_pool_backward(const Tensor& d_out, const Tensor& x, Tensor& d_x);

// x [C,H,W] + b [C], broadcast over spatial axes.
Tensor add_channel_bias(const Tensor& x, const Tensor& b);
void add_channel_bias_backward(const Tensor& d_out, Tensor& d_x, Tensor& d_b);

struct CrossEntropyResult {
  float loss = 0.0f;
  Tensor grad;  // d loss / d logits, already divided by batch size
};

// logits [batch,K]; max-subtracted softmax, f64 accumulation.
CrossEntropyResult softmax_cross_entropy(const Tensor& logits,
                                         const std::vector<int>& labels);

// softmax along the last axis of a [n,K] tensor (report/metrics helper)
Tensor softmax_rows(const Tensor& logits);

}  // namespace eppnet
