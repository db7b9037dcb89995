#pragma once

#include <optional>
#include <span>
#include <vector>

#include "bidyn/dynamics/model.hpp"
#include "bidyn/dynamics/normalizer.hpp"
#include "bidyn/nn/adam.hpp"
#include "bidyn/nn/checkpoint.hpp"
#include "bidyn/nn/gaussian.hpp"
#include "bidyn/nn/mlp.hpp"
#include "bidyn/rollout/transition.hpp"

namespace bidyn::dynamics {

struct EnsembleConfig {
  int ensemble_size = 7;
  int elite_count = 5;
  std::vector<int> hidden_sizes = {64, 64};
  nn::Activation activation = nn::Activation::kSwish;
  nn::AdamConfig adam = {1e-3, 0.9, 0.999, 1e-8, 0.0};
  int batch_size = 256;
  double holdout_ratio = 0.1;
  int max_holdout = 5000;
  int patience = 5;
  // Relative holdout-loss decrease that counts as an improvement.
  double improvement_threshold = 0.01;
  int min_train_size = 32;
  nn::LogVarBounds log_var_bounds;

  void validate() const;
};

struct TrainOptions {
  int max_epochs = 100;
  // When non-empty, one index list per member replaces the bootstrap draw.
  std::vector<std::vector<std::size_t>> forced_bootstrap;
};

struct ModelBatchStats {
  double train_loss = 0.0;
  std::vector<double> validation_loss;
  int epochs = 0;
};

// Selects which output heads contribute to a loss.
struct HeadMask {
  bool state = true;
  bool reward = true;
};

struct Prediction {
  Vector state;
  double reward = 0.0;
};

// Bootstrapped ensemble of Gaussian-output networks predicting the state
// delta (s' - s forward, s - s' backward) and the reward, in normalized
// coordinates. Elites are the members with the lowest holdout loss.
class ProbabilisticEnsemble final : public DynamicsModel {
 public:
  ProbabilisticEnsemble(Direction direction, int state_dim, int action_dim, EnsembleConfig config,
                        Rng& rng);

  Direction direction() const override { return direction_; }
  int state_dim() const override { return state_dim_; }
  int action_dim() const override { return action_dim_; }
  bool ready() const override { return trained_; }
  int draw_member(Rng& rng) const override;

  ModelStep sample(const Matrix& states, const Matrix& actions, std::span<const int> members,
                   Rng& rng) const override;
  ModelStep mean(const Matrix& states, const Matrix& actions) const override;

  // Maximum-likelihood training on the transitions (chronological order;
  // the tail is held out for validation and early stopping).
  ModelBatchStats train(std::span<const Transition> data, const TrainOptions& options, Rng& rng);

  // Per-member mean NLL, no parameter updates.
  std::vector<double> validation_loss(std::span<const Transition> holdout, HeadMask mask = {}) const;

  // Single sample; `member` defaults to a random elite.
  Prediction predict(const Vector& conditioning, const Vector& action, std::optional<int> member,
                     Rng& rng) const;

  // Gaussian over the normalized (delta, reward) target for one member.
  nn::GaussianPrediction member_gaussian(int member, const Vector& conditioning,
                                         const Vector& action) const;

  // Fresh random weights for one member; normalizers and elites are kept.
  void reinitialize_member(int member, Rng& rng);

  const EnsembleConfig& config() const { return config_; }
  const std::vector<int>& elites() const { return elites_; }
  int size() const { return static_cast<int>(members_.size()); }
  nn::Mlp& member(int i) { return members_.at(i); }
  const nn::Mlp& member(int i) const { return members_.at(i); }
  const Normalizer& input_normalizer() const { return input_norm_; }
  const Normalizer& target_normalizer() const { return target_norm_; }

  // Builds (input, target) matrices for this direction.
  void make_training_pairs(std::span<const Transition> data, Matrix* inputs, Matrix* targets) const;

  // Loss over normalized inputs/targets for one member; gradient wrt the
  // member parameters is accumulated into *grads when non-null.
  double member_loss(int member, const Matrix& norm_inputs, const Matrix& norm_targets,
                     HeadMask mask, nn::ParameterStore* grads) const;

  void save(nn::Checkpoint& ckpt, const std::string& prefix) const;
  static ProbabilisticEnsemble load(const nn::Checkpoint& ckpt, const std::string& prefix,
                                    EnsembleConfig config);

 private:
  ProbabilisticEnsemble() = default;
  void check_ready() const;
  Vector head_weights(HeadMask mask) const;

  Direction direction_ = Direction::kForward;
  int state_dim_ = 0;
  int action_dim_ = 0;
  EnsembleConfig config_;
  std::vector<nn::Mlp> members_;
  std::vector<nn::Adam> optimizers_;
  Normalizer input_norm_;
  Normalizer target_norm_;
  std::vector<int> elites_;
  bool trained_ = false;
};

}  // namespace bidyn::dynamics
