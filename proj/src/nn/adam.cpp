#include "bidyn/nn/adam.hpp"

#include <cmath>

#include "bidyn/common/errors.hpp"

namespace bidyn::nn {

Adam::Adam(const ParameterStore& like, AdamConfig config)
    : config_(config), m_(like.zeros_like()), v_(like.zeros_like()) {}

void Adam::step(ParameterStore& params, const ParameterStore& grads) {
  if (!params.same_shape(grads) || !params.same_shape(m_))
    throw InputError("Adam::step: shape mismatch");
  if (!grads.all_finite()) throw NumericalError("Adam::step: non-finite gradient");

  ++step_count_;
  const double t = static_cast<double>(step_count_);
  const double c1 = 1.0 - std::pow(config_.beta1, t);
  const double c2 = 1.0 - std::pow(config_.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    m_[i] = config_.beta1 * m_[i] + (1.0 - config_.beta1) * grads[i];
    v_[i] = config_.beta2 * v_[i] + (1.0 - config_.beta2) * grads[i].cwiseAbs2();
    if (config_.weight_decay > 0.0) params[i] *= 1.0 - config_.lr * config_.weight_decay;
    params[i].array() -=
        config_.lr * (m_[i].array() / c1) / ((v_[i].array() / c2).sqrt() + config_.eps);
  }
  if (!params.all_finite()) throw NumericalError("Adam::step: parameters became non-finite");
}

}  // namespace bidyn::nn
