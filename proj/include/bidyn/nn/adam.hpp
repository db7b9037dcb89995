#pragma once

#include <cstdint>

#include "bidyn/nn/parameter_store.hpp"

namespace bidyn::nn {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  // Decoupled weight decay, applied as params *= (1 - lr * weight_decay).
  double weight_decay = 0.0;
};

// Adaptive-moment optimizer with bias correction. Moment buffers are shaped
// like the parameter store they were created for.
class Adam {
 public:
  Adam() = default;
  Adam(const ParameterStore& like, AdamConfig config);

  // Throws NumericalError on non-finite gradients.
  void step(ParameterStore& params, const ParameterStore& grads);

  const AdamConfig& config() const { return config_; }
  void set_lr(double lr) { config_.lr = lr; }
  std::int64_t step_count() const { return step_count_; }

  const ParameterStore& first_moment() const { return m_; }
  const ParameterStore& second_moment() const { return v_; }

 private:
  AdamConfig config_;
  ParameterStore m_;
  ParameterStore v_;
  std::int64_t step_count_ = 0;
};

}  // namespace bidyn::nn
