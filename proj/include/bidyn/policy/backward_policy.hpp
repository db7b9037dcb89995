#pragma once

#include <span>
#include <vector>

#include "bidyn/nn/adam.hpp"
#include "bidyn/nn/checkpoint.hpp"
#include "bidyn/policy/squashed_gaussian.hpp"
#include "bidyn/rollout/transition.hpp"

namespace bidyn::policy {

struct BackwardPolicyConfig {
  std::vector<int> hidden_sizes = {64, 64};
  nn::Activation activation = nn::Activation::kRelu;
  double lr = 3e-4;
  int batch_size = 256;
};

// pi~(a | s'): the action that plausibly led into s'. Conditioned on the
// successor state, squashed onto the action box.
class BackwardPolicy {
 public:
  BackwardPolicy(int obs_dim, ActionBounds bounds, BackwardPolicyConfig config, Rng& rng);

  const BackwardPolicyConfig& config() const { return config_; }
  SquashedGaussianPolicy& head() { return head_; }
  const SquashedGaussianPolicy& head() const { return head_; }
  nn::Adam& optimizer() { return opt_; }

  Matrix sample(const Matrix& next_states, Rng& rng) const;
  Vector sample(const Vector& next_state, Rng& rng) const;

  // Mean of -log pi~(a_t | s_{t+1}) over the transitions.
  double nll(std::span<const Transition> data) const;

  // One minibatch gradient step on the negative log-likelihood; returns the
  // pre-step minibatch loss.
  double mle_step(std::span<const Transition> data, Rng& rng);

  void save(nn::Checkpoint& ckpt, const std::string& prefix) const;
  void load(const nn::Checkpoint& ckpt, const std::string& prefix);

 private:
  BackwardPolicyConfig config_;
  SquashedGaussianPolicy head_;
  nn::Adam opt_;
};

// D(a, s') -> logit. Input is the action stacked above the successor state.
class Discriminator {
 public:
  Discriminator(int obs_dim, int act_dim, std::vector<int> hidden, nn::Activation activation,
                double lr, Rng& rng);

  nn::Mlp& net() { return net_; }
  const nn::Mlp& net() const { return net_; }
  nn::Adam& optimizer() { return opt_; }

  Vector logits(const Matrix& actions, const Matrix& next_states) const;

 private:
  nn::Mlp net_;
  nn::Adam opt_;
};

// Negated value of the discriminator on real and generated pairs:
// mean softplus(-logit_real) + mean softplus(logit_fake).
double discriminator_loss(const Vector& real_logits, const Vector& fake_logits);

// Generator objective mean log(1 - sigmoid(logit_fake)), minimized.
double generator_loss(const Vector& fake_logits);

// discriminator_loss on (real, fake) action batches paired with next_states,
// with discriminator parameter gradients accumulated into *grads if non-null.
double gan_discriminator_objective(const Discriminator& discriminator, const Matrix& real_actions,
                                   const Matrix& fake_actions, const Matrix& next_states,
                                   nn::ParameterStore* grads);

// generator_loss of reparameterized samples drawn with the given noise
// (act x batch), with policy parameter gradients accumulated into *grads if
// non-null. The discriminator is held fixed.
double gan_generator_objective(const BackwardPolicy& policy, const Discriminator& discriminator,
                               const Matrix& next_states, const Matrix& noise,
                               nn::ParameterStore* grads);

struct GanLosses {
  double d_loss = 0.0;
  double g_loss = 0.0;
};

// One discriminator ascent step followed by one generator descent step on a
// minibatch of (a_t, s_{t+1}) pairs. Throws PreconditionError on empty data
// and NumericalError on non-finite losses.
GanLosses train_backward_policy_gan(BackwardPolicy& policy, Discriminator& discriminator,
                                    std::span<const Transition> data, Rng& rng);

// Runs `steps` MLE minibatch steps; returns the mean NLL over the data after
// training. Throws PreconditionError on empty data.
double train_backward_policy_mle(BackwardPolicy& policy, std::span<const Transition> data,
                                 int steps, Rng& rng);

}  // namespace bidyn::policy
