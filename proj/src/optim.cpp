#include "eppnet/optim.hpp"

namespace eppnet {

float effective_learning_rate(const OptimizerConfig& cfg, int epoch) {
  float lr = cfg.learning_rate;
  for (const auto& [at, mult] : cfg.schedule)
    if (at <= epoch) lr *= mult;
  return lr;
}

void sgd_step(std::vector<Parameter*>& params, const OptimizerConfig& cfg,
              int epoch) {
  const float lr = effective_learning_rate(cfg, epoch);
  for (Parameter* p : params) {
    for (size_t i = 0; i < p->value.data.size(); ++i) {
      const float g = p->grad.data[i] + cfg.weight_decay * p->value.data[i];
      p->velocity.data[i] = cfg.momentum * p->velocity.data[i] - lr * g;
      p->value.data[i] += p->velocity.data[i];
    }
    p->zero_grad();
  }
}

}  // namespace eppnet
