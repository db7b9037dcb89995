#pragma once

#include <optional>
#include <span>
#include <vector>

#include "bidyn/nn/adam.hpp"
#include "bidyn/nn/checkpoint.hpp"
#include "bidyn/policy/squashed_gaussian.hpp"
#include "bidyn/rollout/transition.hpp"

namespace bidyn::policy {

struct SacConfig {
  std::vector<int> hidden_sizes = {64, 64};
  nn::Activation activation = nn::Activation::kRelu;
  double actor_lr = 3e-4;
  double critic_lr = 3e-4;
  double alpha_lr = 3e-4;
  double gamma = 0.99;
  double tau = 0.005;
  double init_alpha = 1.0;
  // Defaults to -act_dim.
  std::optional<double> target_entropy;

  void validate() const;
};

// Column-major view of a batch of transitions.
struct SacBatch {
  Matrix s;
  Matrix a;
  Vector r;
  Matrix s_next;
  Vector done;

  static SacBatch from(std::span<const Transition> transitions);
  static SacBatch from(const std::vector<const Transition*>& transitions);
  Eigen::Index size() const { return s.cols(); }
};

struct SacLossReport {
  double q1_loss = 0.0;
  double q2_loss = 0.0;
  double pi_loss = 0.0;
  double alpha_loss = 0.0;
  double alpha = 0.0;
  double entropy = 0.0;  // -mean log pi of the actor batch
};

struct CriticLosses {
  double q1 = 0.0;
  double q2 = 0.0;
  double total() const { return q1 + q2; }
};

// Soft actor-critic: squashed-Gaussian actor, twin Q critics with Polyak
// targets and a learned entropy temperature (stored as log alpha).
class SacAgent {
 public:
  SacAgent(int obs_dim, ActionBounds bounds, SacConfig config, Rng& rng);

  int obs_dim() const { return actor_.obs_dim(); }
  int act_dim() const { return actor_.act_dim(); }
  const SacConfig& config() const { return config_; }
  double alpha() const;
  double log_alpha() const { return log_alpha_[0](0, 0); }
  double target_entropy() const { return target_entropy_; }

  const SquashedGaussianPolicy& actor() const { return actor_; }
  SquashedGaussianPolicy& actor() { return actor_; }
  nn::Mlp& q1() { return q1_; }
  nn::Mlp& q2() { return q2_; }
  const nn::Mlp& q1() const { return q1_; }
  const nn::Mlp& q2() const { return q2_; }
  const nn::Mlp& q1_target() const { return q1_target_; }
  const nn::Mlp& q2_target() const { return q2_target_; }
  void set_log_alpha(double v) { log_alpha_[0](0, 0) = v; }

  Vector act(const Vector& obs, bool deterministic, Rng& rng) const;
  Matrix act_batch(const Matrix& obs, bool deterministic, Rng& rng) const;

  // Soft value: mean over sampled actions of min twin Q - alpha log pi.
  double estimate_value(const Vector& obs, int n_action_samples, Rng& rng) const;
  Vector estimate_values(const Matrix& obs, int n_action_samples, Rng& rng) const;
  // Same with caller-supplied standard-normal noise (act_dim x samples); every
  // observation sees the same draws, so differences between columns are
  // free of sampling noise.
  Vector estimate_values(const Matrix& obs, const Matrix& shared_noise) const;

  // One gradient step each on critics, actor and temperature, followed by
  // the Polyak target update. Throws PreconditionError on an empty batch
  // and NumericalError on non-finite losses.
  SacLossReport update(const SacBatch& batch, Rng& rng);
  SacLossReport update(std::span<const Transition> batch, Rng& rng);

  // Mean squared Bellman error of each critic against the soft target built
  // from the target twins and the actor sampled with next_noise.
  CriticLosses critic_loss(const SacBatch& batch, const Matrix& next_noise,
                           nn::ParameterStore* grad_q1, nn::ParameterStore* grad_q2) const;

  // mean(alpha log pi(a|s) - min Q(s, a)) with a reparameterized by noise.
  // log_probs receives the sampled log-densities when non-null.
  double actor_loss(const Matrix& obs, const Matrix& noise, nn::ParameterStore* grad,
                    Vector* log_probs = nullptr) const;

  // -log_alpha * mean(log_probs + target_entropy).
  double alpha_loss(const Vector& log_probs, double* grad_log_alpha) const;

  double min_q(const Vector& obs, const Vector& action) const;
  Vector min_q(const Matrix& obs, const Matrix& actions) const;

  void save(nn::Checkpoint& ckpt, const std::string& prefix) const;
  void load(const nn::Checkpoint& ckpt, const std::string& prefix);

 private:
  Matrix critic_input(const Matrix& obs, const Matrix& actions) const;

  SacConfig config_;
  double target_entropy_ = 0.0;
  SquashedGaussianPolicy actor_;
  nn::Mlp q1_, q2_, q1_target_, q2_target_;
  nn::ParameterStore log_alpha_;
  nn::Adam actor_opt_, q1_opt_, q2_opt_, alpha_opt_;
};

}  // namespace bidyn::policy
