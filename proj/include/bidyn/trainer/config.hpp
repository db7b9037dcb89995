#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "bidyn/dynamics/ensemble.hpp"
#include "bidyn/mpc/planner.hpp"
#include "bidyn/policy/backward_policy.hpp"
#include "bidyn/policy/sac.hpp"
#include "bidyn/rollout/schedule.hpp"

namespace bidyn::trainer {

enum class Ablation { kFull, kForwardOnly, kBackwardOnly, kNoMpc };
enum class BackwardLoss { kMle, kGan };

std::string to_string(Ablation a);
std::string to_string(BackwardLoss l);
// Accepts full|forward-only|backward-only|no-mpc (underscores also accepted).
Ablation ablation_from_string(const std::string& s);
BackwardLoss backward_loss_from_string(const std::string& s);

struct TrainConfig {
  std::uint64_t seed = 0;
  int n_epochs = 20;
  int env_steps_per_epoch = 200;
  int rollouts_per_step = 20;
  int policy_grad_steps = 10;
  int backward_policy_steps = 1;
  int sac_batch_size = 256;
  // Fraction of each SAC batch drawn from real transitions.
  double real_ratio = 0.0;
  double gamma = 0.99;
  std::size_t env_buffer_capacity = 1000000;
  std::size_t model_buffer_capacity = 40000;
  // Recent env steps used to fit the backward policy.
  std::size_t backward_window = 1000;
  std::size_t candidate_pool = 1000;
  int value_samples = 1;
  int model_max_epochs = 50;

  Schedule k1{1.0, 5.0, 1, 5};
  Schedule k2{1.0, 5.0, 1, 5};
  Schedule beta{0.01, 0.0, 0, 10};

  policy::SacConfig sac;
  dynamics::EnsembleConfig model;
  policy::BackwardPolicyConfig backward_policy;
  double discriminator_lr = 3e-4;
  mpc::MpcConfig mpc;

  Ablation ablation = Ablation::kFull;
  BackwardLoss backward_loss = BackwardLoss::kMle;

  int eval_episodes = 10;
  std::uint64_t eval_seed = 1000003;
  // Stop after the first evaluation reaching this return.
  std::optional<double> stop_return;

  // Checks ranges and copies gamma into the SAC and MPC sub-configs.
  void finalize();
};

// Pendulum preset (the defaults above).
TrainConfig pendulum_preset();

// Flat "key = value" text; '#' starts a comment. Unknown keys and malformed
// values throw InputError naming the line. Keys absent from the text keep
// the values of `base`.
TrainConfig parse_config(const std::string& text, TrainConfig base = pendulum_preset());
TrainConfig load_config(const std::string& path, TrainConfig base = pendulum_preset());
std::string to_text(const TrainConfig& config);

}  // namespace bidyn::trainer
