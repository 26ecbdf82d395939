#pragma once

#include <string>
#include <utility>
#include <vector>

#include "eppnet/tensor.hpp"

namespace eppnet {

struct Parameter {
  Tensor value;
  Tensor grad;
  Tensor velocity;
  std::string name;

  Parameter() = default;
  Parameter(std::string n, Tensor v)
      : value(std::move(v)), grad(value.shape), velocity(value.shape),
        name(std::move(n)) {}

  void zero_grad() { grad.fill(0.0f); }
};

struct OptimizerConfig {
  float learning_rate = 0.1f;
  float momentum = 0.9f;
  float weight_decay = 4e-4f;
  // (epoch, multiplier) pairs; every multiplier whose epoch <= current
  // epoch is applied to the base rate.
  std::vector<std::pair<int, float>> schedule;
};

float effective_learning_rate(const OptimizerConfig& cfg, int epoch);

// v <- momentum*v - lr*(grad + weight_decay*value); value <- value + v;
// grads are zeroed afterwards.
void sgd_step(std::vector<Parameter*>& params, const OptimizerConfig& cfg,
              int epoch);

}  // namespace eppnet
