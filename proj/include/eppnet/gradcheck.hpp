#pragma once

#include <functional>

#include "eppnet/tensor.hpp"

namespace eppnet {

// A scalar-valued differentiable map. When `grad_out` is non-null the
// callee must fill it with d f / d x (same shape as x).
using ScalarFn = std::function<double(const Tensor& x, Tensor* grad_out)>;

// Central finite differences against the analytic gradient; returns the
// max over coordinates of |a-n| / max(1, |a|+|n|): relative error for
// large gradients, absolute error (immune to f32 noise) for small ones.
double grad_check(const ScalarFn& f, const Tensor& x, double eps);

}  // namespace eppnet
