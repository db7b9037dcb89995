#pragma once

#include <vector>

#include "bidyn/common/random.hpp"
#include "bidyn/common/types.hpp"
#include "bidyn/nn/mlp.hpp"

namespace bidyn::policy {

struct ActionBounds {
  Vector low;
  Vector high;

  Vector center() const { return 0.5 * (high + low); }
  Vector half_range() const { return 0.5 * (high - low); }
  int dim() const { return static_cast<int>(low.size()); }
};

// Gaussian in pre-squash space, squashed by tanh and affinely mapped onto the
// action box:  a = center + half * tanh(mean + std * noise). The network
// outputs the mean and a raw log-std that is smoothly confined to
// [kLogStdMin, kLogStdMax]. Densities include the change-of-variables
// correction, so they integrate to one over the action box.
class SquashedGaussianPolicy {
 public:
  static constexpr double kLogStdMin = -5.0;
  static constexpr double kLogStdMax = 2.0;

  // Everything needed to backpropagate through one reparameterized sample.
  struct Pass {
    nn::Mlp::Cache cache;
    Matrix noise;
    Matrix raw_log_std;
    Matrix std;
    Matrix squashed;  // tanh(u)
    Matrix actions;
    Vector log_probs;
  };

  SquashedGaussianPolicy() = default;
  SquashedGaussianPolicy(int obs_dim, ActionBounds bounds, std::vector<int> hidden,
                         nn::Activation activation, Rng& rng);

  int obs_dim() const { return net_.spec().input_dim; }
  int act_dim() const { return bounds_.dim(); }
  const ActionBounds& bounds() const { return bounds_; }
  nn::Mlp& net() { return net_; }
  const nn::Mlp& net() const { return net_; }
  void set_net(nn::Mlp net);

  // Reparameterized sample for the given standard-normal noise (act x batch).
  Pass sample(const Matrix& obs, const Matrix& noise) const;
  Pass sample(const Matrix& obs, Rng& rng) const;

  // Backpropagates d loss / d actions and d loss / d log_probs of a pass.
  // Parameter gradients accumulate into *grads; returns d loss / d obs.
  Matrix backward(const Pass& pass, const Matrix& d_actions, const Vector& d_log_probs,
                  nn::ParameterStore* grads) const;

  // center + half * tanh(mean)
  Matrix deterministic(const Matrix& obs) const;

  // Log-density of given in-bounds actions.
  Vector log_prob(const Matrix& obs, const Matrix& actions) const;

  // Mean negative log-likelihood of the actions, with parameter gradients.
  double nll(const Matrix& obs, const Matrix& actions, nn::ParameterStore* grads) const;

 private:
  Matrix log_std_from_raw(const Matrix& raw) const;

  ActionBounds bounds_;
  nn::Mlp net_;
};

}  // namespace bidyn::policy
