#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "bidyn/dynamics/ensemble.hpp"
#include "bidyn/env/environment.hpp"
#include "bidyn/mpc/planner.hpp"
#include "bidyn/policy/backward_policy.hpp"
#include "bidyn/policy/sac.hpp"
#include "bidyn/rollout/replay_buffer.hpp"
#include "bidyn/trainer/config.hpp"
#include "bidyn/trainer/metrics.hpp"

namespace bidyn::trainer {

// Call counts used to check ablation and evaluation contracts.
struct Instrumentation {
  std::uint64_t env_steps = 0;
  std::uint64_t forward_model_trainings = 0;
  std::uint64_t backward_model_trainings = 0;
  std::uint64_t backward_policy_updates = 0;
  std::uint64_t sac_updates = 0;
  std::uint64_t mpc_calls = 0;
  std::uint64_t mpc_calls_during_eval = 0;
  std::uint64_t forward_rollout_transitions = 0;
  std::uint64_t backward_rollout_transitions = 0;
};

struct RunResult {
  std::vector<MetricsRow> rows;
  bool stopped_early = false;
  // Env steps at the first evaluation whose mean return reached threshold.
  std::optional<long long> first_steps_reaching(double threshold) const;
  double best_return() const;
};

using EnvFactory = std::function<std::unique_ptr<env::Environment>()>;

// Bidirectional model-based policy optimization. Per epoch: fit the
// forward and backward ensembles on real data; per env step: act through
// MPC, store the real transition, branch M bidirectional rollouts from
// Boltzmann-sampled real states into the model buffer, run G SAC updates on
// model data and G' backward-policy updates on recent real data. Evaluates
// at every epoch end.
//
// With a non-empty out_dir the trainer writes config.txt, metrics.csv
// (flushed per row), last_good.ckpt after each evaluation and final.ckpt.
// A NumericalError during training writes diagnostic.txt and is rethrown;
// last_good.ckpt then holds the most recent healthy state.
class BmpoTrainer {
 public:
  BmpoTrainer(TrainConfig config, std::string out_dir = "", EnvFactory make_env = {});

  RunResult run();

  const TrainConfig& config() const { return config_; }
  const Instrumentation& instrumentation() const { return counters_; }
  const policy::SacAgent& agent() const { return agent_; }
  const dynamics::ProbabilisticEnsemble& forward_model() const { return forward_; }
  const dynamics::ProbabilisticEnsemble& backward_model() const { return backward_; }
  const policy::BackwardPolicy& backward_policy() const { return backward_policy_; }
  const ReplayBuffer& env_buffer() const { return env_buffer_; }
  const ReplayBuffer& model_buffer() const { return model_buffer_; }

  void save(nn::Checkpoint& ckpt) const;

 private:
  struct EpochLosses {
    double q_loss = 0.0;
    double pi_loss = 0.0;
    int updates = 0;
  };

  void train_models(MetricsRow& row);
  Vector choose_action(const Vector& obs);
  void model_rollouts(int k1, int k2, double beta);
  void sac_updates(EpochLosses& losses);
  void backward_policy_updates();
  void write_checkpoint(const std::string& name) const;

  TrainConfig config_;
  std::string out_dir_;
  std::unique_ptr<env::Environment> env_;
  std::unique_ptr<env::Environment> eval_env_;
  Rng root_;
  Rng act_rng_, model_rng_, rollout_rng_, sac_rng_, bpolicy_rng_;
  policy::SacAgent agent_;
  dynamics::ProbabilisticEnsemble forward_;
  dynamics::ProbabilisticEnsemble backward_;
  policy::BackwardPolicy backward_policy_;
  policy::Discriminator discriminator_;
  mpc::MpcPlanner planner_;
  ReplayBuffer env_buffer_;
  ReplayBuffer model_buffer_;
  Instrumentation counters_;
};

// Seed from BIDYN_SEED when set and parseable, else `fallback`.
std::uint64_t seed_from_environment(std::uint64_t fallback);

}  // namespace bidyn::trainer
