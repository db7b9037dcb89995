#include "bidyn/dynamics/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "bidyn/common/errors.hpp"

namespace bidyn::dynamics {

std::string to_string(Direction d) { return d == Direction::kForward ? "forward" : "backward"; }

void EnsembleConfig::validate() const {
  if (ensemble_size < 2) throw InputError("EnsembleConfig: ensemble_size must be >= 2");
  if (elite_count < 1 || elite_count > ensemble_size)
    throw InputError("EnsembleConfig: elite_count must be in [1, ensemble_size]");
  if (batch_size < 1) throw InputError("EnsembleConfig: batch_size must be >= 1");
  if (!(holdout_ratio > 0.0 && holdout_ratio < 1.0))
    throw InputError("EnsembleConfig: holdout_ratio must be in (0, 1)");
  if (patience < 1) throw InputError("EnsembleConfig: patience must be >= 1");
  if (!(log_var_bounds.min < log_var_bounds.max)) throw InputError("EnsembleConfig: bad log-var bounds");
}

ProbabilisticEnsemble::ProbabilisticEnsemble(Direction direction, int state_dim, int action_dim,
                                             EnsembleConfig config, Rng& rng)
    : direction_(direction),
      state_dim_(state_dim),
      action_dim_(action_dim),
      config_(std::move(config)),
      input_norm_(state_dim + action_dim),
      target_norm_(state_dim + 1) {
  config_.validate();
  if (state_dim < 1 || action_dim < 1) throw InputError("ProbabilisticEnsemble: dims must be >= 1");
  nn::MlpSpec spec{state_dim + action_dim, 2 * (state_dim + 1), config_.hidden_sizes,
                   config_.activation};
  for (int i = 0; i < config_.ensemble_size; ++i) {
    members_.emplace_back(spec, rng);
    optimizers_.emplace_back(members_.back().params(), config_.adam);
  }
  elites_.resize(config_.elite_count);
  std::iota(elites_.begin(), elites_.end(), 0);
}

void ProbabilisticEnsemble::check_ready() const {
  if (!trained_) throw StateError("ProbabilisticEnsemble: model has not been trained");
}

int ProbabilisticEnsemble::draw_member(Rng& rng) const {
  return elites_[rng.index(elites_.size())];
}

Vector ProbabilisticEnsemble::head_weights(HeadMask mask) const {
  Vector w(state_dim_ + 1);
  w.head(state_dim_).setConstant(mask.state ? 1.0 : 0.0);
  w[state_dim_] = mask.reward ? 1.0 : 0.0;
  return w;
}

void ProbabilisticEnsemble::make_training_pairs(std::span<const Transition> data, Matrix* inputs,
                                                Matrix* targets) const {
  const auto n = static_cast<Eigen::Index>(data.size());
  inputs->resize(state_dim_ + action_dim_, n);
  targets->resize(state_dim_ + 1, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const Transition& t = data[j];
    if (t.s.size() != state_dim_ || t.s_next.size() != state_dim_ || t.a.size() != action_dim_)
      throw InputError("ProbabilisticEnsemble: transition dimension mismatch");
    const Vector& from = direction_ == Direction::kForward ? t.s : t.s_next;
    const Vector& to = direction_ == Direction::kForward ? t.s_next : t.s;
    inputs->col(j).head(state_dim_) = from;
    inputs->col(j).tail(action_dim_) = t.a;
    targets->col(j).head(state_dim_) = to - from;
    (*targets)(state_dim_, j) = t.r;
  }
}

void ProbabilisticEnsemble::reinitialize_member(int member, Rng& rng) {
  if (member < 0 || member >= size()) throw InputError("member index out of range");
  members_[member] = nn::Mlp(members_[member].spec(), rng);
  optimizers_[member] = nn::Adam(members_[member].params(), config_.adam);
}

double ProbabilisticEnsemble::member_loss(int member, const Matrix& norm_inputs,
                                          const Matrix& norm_targets, HeadMask mask,
                                          nn::ParameterStore* grads) const {
  const nn::Mlp& net = members_.at(member);
  const Vector w = head_weights(mask);
  if (grads == nullptr)
    return nn::batch_gaussian_nll(net.forward(norm_inputs), norm_targets, w, config_.log_var_bounds);
  nn::Mlp::Cache cache;
  const Matrix raw = net.forward(norm_inputs, &cache);
  Matrix d_raw;
  const double loss = nn::batch_gaussian_nll(raw, norm_targets, w, config_.log_var_bounds, &d_raw);
  net.backward(cache, d_raw, grads);
  return loss;
}

ModelBatchStats ProbabilisticEnsemble::train(std::span<const Transition> data,
                                             const TrainOptions& options, Rng& rng) {
  const std::size_t min_size = std::max<std::size_t>(config_.min_train_size, 2);
  if (data.size() < min_size)
    throw PreconditionError("ProbabilisticEnsemble::train: need at least " +
                            std::to_string(min_size) + " transitions, got " +
                            std::to_string(data.size()));
  if (!options.forced_bootstrap.empty() &&
      options.forced_bootstrap.size() != members_.size())
    throw InputError("ProbabilisticEnsemble::train: forced_bootstrap needs one list per member");

  Matrix inputs, targets;
  make_training_pairs(data, &inputs, &targets);
  input_norm_.fit(inputs);
  target_norm_.fit(targets);
  const Matrix x = input_norm_.normalize(inputs);
  const Matrix y = target_norm_.normalize(targets);

  const Eigen::Index n = x.cols();
  const Eigen::Index n_hold = std::min<Eigen::Index>(
      config_.max_holdout,
      std::max<Eigen::Index>(1, static_cast<Eigen::Index>(config_.holdout_ratio * n)));
  const Eigen::Index n_train = n - n_hold;
  const Matrix x_hold = x.rightCols(n_hold);
  const Matrix y_hold = y.rightCols(n_hold);

  const int b = size();
  std::vector<std::vector<Eigen::Index>> boot(b);
  for (int k = 0; k < b; ++k) {
    if (!options.forced_bootstrap.empty()) {
      for (std::size_t idx : options.forced_bootstrap[k]) {
        if (static_cast<Eigen::Index>(idx) >= n_train)
          throw InputError("ProbabilisticEnsemble::train: forced bootstrap index out of range");
        boot[k].push_back(static_cast<Eigen::Index>(idx));
      }
    } else {
      Rng member_rng = rng.substream("bootstrap", k);
      boot[k].resize(n_train);
      for (auto& idx : boot[k]) idx = static_cast<Eigen::Index>(member_rng.index(n_train));
    }
    if (boot[k].empty()) throw InputError("ProbabilisticEnsemble::train: empty bootstrap sample");
  }

  const HeadMask all;
  std::vector<double> best(b);
  std::vector<nn::ParameterStore> snapshot(b);
  for (int k = 0; k < b; ++k) {
    best[k] = member_loss(k, x_hold, y_hold, all, nullptr);
    snapshot[k] = members_[k].params();
  }

  ModelBatchStats stats;
  int since_improved = 0;
  for (int epoch = 0; epoch < options.max_epochs; ++epoch) {
    double epoch_loss = 0.0;
    std::size_t batches = 0;
    for (int k = 0; k < b; ++k) {
      Rng shuffle_rng = rng.substream("shuffle", static_cast<std::uint64_t>(epoch * b + k));
      std::shuffle(boot[k].begin(), boot[k].end(), shuffle_rng.engine());
      nn::ParameterStore grads = members_[k].params().zeros_like();
      for (std::size_t start = 0; start < boot[k].size(); start += config_.batch_size) {
        const std::size_t end = std::min(boot[k].size(), start + config_.batch_size);
        const std::vector<Eigen::Index> idx(boot[k].begin() + start, boot[k].begin() + end);
        grads.set_zero();
        const double loss = member_loss(k, x(Eigen::all, idx), y(Eigen::all, idx), all, &grads);
        if (!std::isfinite(loss) || !grads.all_finite())
          throw NumericalError("ProbabilisticEnsemble(" + to_string(direction_) +
                               "): divergent loss in member " + std::to_string(k));
        optimizers_[k].step(members_[k].params(), grads);
        epoch_loss += loss;
        ++batches;
      }
    }
    stats.train_loss = epoch_loss / static_cast<double>(std::max<std::size_t>(batches, 1));
    stats.epochs = epoch + 1;

    bool improved = false;
    for (int k = 0; k < b; ++k) {
      const double hold = member_loss(k, x_hold, y_hold, all, nullptr);
      if (!std::isfinite(hold))
        throw NumericalError("ProbabilisticEnsemble(" + to_string(direction_) +
                             "): non-finite validation loss in member " + std::to_string(k));
      if ((best[k] - hold) / std::max(std::abs(best[k]), 1e-12) > config_.improvement_threshold) {
        best[k] = hold;
        snapshot[k] = members_[k].params();
        improved = true;
      }
    }
    since_improved = improved ? 0 : since_improved + 1;
    if (since_improved >= config_.patience) break;
  }

  for (int k = 0; k < b; ++k) members_[k].params() = snapshot[k];
  stats.validation_loss.resize(b);
  for (int k = 0; k < b; ++k) stats.validation_loss[k] = member_loss(k, x_hold, y_hold, all, nullptr);

  std::vector<int> order(b);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int i, int j) {
    return stats.validation_loss[i] < stats.validation_loss[j];
  });
  elites_.assign(order.begin(), order.begin() + config_.elite_count);
  std::sort(elites_.begin(), elites_.end());
  trained_ = true;
  return stats;
}

std::vector<double> ProbabilisticEnsemble::validation_loss(std::span<const Transition> holdout,
                                                           HeadMask mask) const {
  if (holdout.empty()) throw PreconditionError("validation_loss: empty holdout");
  Matrix inputs, targets;
  make_training_pairs(holdout, &inputs, &targets);
  const Matrix x = input_norm_.normalize(inputs);
  const Matrix y = target_norm_.normalize(targets);
  std::vector<double> out(members_.size());
  for (int k = 0; k < size(); ++k) out[k] = member_loss(k, x, y, mask, nullptr);
  return out;
}

ModelStep ProbabilisticEnsemble::sample(const Matrix& states, const Matrix& actions,
                                        std::span<const int> members, Rng& rng) const {
  check_ready();
  const Eigen::Index n = states.cols();
  if (states.rows() != state_dim_ || actions.rows() != action_dim_ || actions.cols() != n)
    throw InputError("ProbabilisticEnsemble::sample: dimension mismatch");
  if (!members.empty() && static_cast<Eigen::Index>(members.size()) != n)
    throw InputError("ProbabilisticEnsemble::sample: need one member index per column");

  std::vector<int> chosen(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const int m = members.empty() ? -1 : members[j];
    if (m >= size()) throw InputError("ProbabilisticEnsemble: member index out of range");
    chosen[j] = m < 0 ? draw_member(rng) : m;
  }

  Matrix input(state_dim_ + action_dim_, n);
  input.topRows(state_dim_) = states;
  input.bottomRows(action_dim_) = actions;
  const Matrix x = input_norm_.normalize(input);

  const Eigen::Index d = state_dim_ + 1;
  Matrix mu(d, n), log_var(d, n);
  for (int k = 0; k < size(); ++k) {
    std::vector<Eigen::Index> cols;
    for (Eigen::Index j = 0; j < n; ++j)
      if (chosen[j] == k) cols.push_back(j);
    if (cols.empty()) continue;
    const Matrix raw = members_[k].forward(Matrix(x(Eigen::all, cols)));
    mu(Eigen::all, cols) = raw.topRows(d);
    log_var(Eigen::all, cols) = nn::soft_bound_log_var(raw.bottomRows(d), config_.log_var_bounds);
  }
  Matrix z(d, n);
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index i = 0; i < d; ++i)
      z(i, j) = mu(i, j) + std::exp(0.5 * log_var(i, j)) * rng.normal();
  const Matrix target = target_norm_.denormalize(z);
  return {states + target.topRows(state_dim_), target.row(state_dim_).transpose()};
}

ModelStep ProbabilisticEnsemble::mean(const Matrix& states, const Matrix& actions) const {
  check_ready();
  const Eigen::Index n = states.cols();
  if (states.rows() != state_dim_ || actions.rows() != action_dim_ || actions.cols() != n)
    throw InputError("ProbabilisticEnsemble::mean: dimension mismatch");
  Matrix input(state_dim_ + action_dim_, n);
  input.topRows(state_dim_) = states;
  input.bottomRows(action_dim_) = actions;
  const Matrix x = input_norm_.normalize(input);
  const Eigen::Index d = state_dim_ + 1;
  Matrix acc = Matrix::Zero(d, n);
  for (int k : elites_) acc += target_norm_.denormalize(members_[k].forward(x).topRows(d));
  acc /= static_cast<double>(elites_.size());
  return {states + acc.topRows(state_dim_), acc.row(state_dim_).transpose()};
}

Prediction ProbabilisticEnsemble::predict(const Vector& conditioning, const Vector& action,
                                          std::optional<int> member, Rng& rng) const {
  if (member && (*member < 0 || *member >= size()))
    throw InputError("ProbabilisticEnsemble::predict: member index out of range");
  check_ready();
  const int m = member ? *member : draw_member(rng);
  const ModelStep step = sample(Matrix(conditioning), Matrix(action), std::span<const int>(&m, 1), rng);
  return {step.states.col(0), step.rewards[0]};
}

nn::GaussianPrediction ProbabilisticEnsemble::member_gaussian(int member, const Vector& conditioning,
                                                              const Vector& action) const {
  if (member < 0 || member >= size()) throw InputError("member index out of range");
  Vector input(state_dim_ + action_dim_);
  input << conditioning, action;
  const Matrix raw = members_[member].forward(input_norm_.normalize(Matrix(input)));
  const Eigen::Index d = state_dim_ + 1;
  return {raw.topRows(d).col(0),
          nn::soft_bound_log_var(raw.bottomRows(d), config_.log_var_bounds).col(0)};
}

void ProbabilisticEnsemble::save(nn::Checkpoint& ckpt, const std::string& prefix) const {
  ckpt.put_scalar(prefix + "/direction", direction_ == Direction::kForward ? 0.0 : 1.0);
  ckpt.put_scalar(prefix + "/state_dim", state_dim_);
  ckpt.put_scalar(prefix + "/action_dim", action_dim_);
  ckpt.put_scalar(prefix + "/trained", trained_ ? 1.0 : 0.0);
  Matrix elites(1, static_cast<Eigen::Index>(elites_.size()));
  for (std::size_t i = 0; i < elites_.size(); ++i) elites(0, i) = elites_[i];
  ckpt.put(prefix + "/elites", elites);
  ckpt.put(prefix + "/input_mean", input_norm_.mean());
  ckpt.put(prefix + "/input_std", input_norm_.stddev());
  ckpt.put(prefix + "/target_mean", target_norm_.mean());
  ckpt.put(prefix + "/target_std", target_norm_.stddev());
  ckpt.put(prefix + "/log_var_bounds",
           (Matrix(1, 2) << config_.log_var_bounds.min, config_.log_var_bounds.max).finished());
  for (int k = 0; k < size(); ++k) nn::save_mlp(ckpt, prefix + "/member" + std::to_string(k), members_[k]);
}

ProbabilisticEnsemble ProbabilisticEnsemble::load(const nn::Checkpoint& ckpt,
                                                  const std::string& prefix,
                                                  EnsembleConfig config) {
  ProbabilisticEnsemble e;
  e.direction_ = ckpt.get_scalar(prefix + "/direction") == 0.0 ? Direction::kForward
                                                                : Direction::kBackward;
  e.state_dim_ = static_cast<int>(ckpt.get_scalar(prefix + "/state_dim"));
  e.action_dim_ = static_cast<int>(ckpt.get_scalar(prefix + "/action_dim"));
  e.trained_ = ckpt.get_scalar(prefix + "/trained") != 0.0;
  const Matrix& bounds = ckpt.get(prefix + "/log_var_bounds");
  config.log_var_bounds = {bounds(0, 0), bounds(0, 1)};
  int count = 0;
  while (ckpt.has(prefix + "/member" + std::to_string(count) + "/activation")) ++count;
  config.ensemble_size = count;
  const Matrix& elites = ckpt.get(prefix + "/elites");
  config.elite_count = static_cast<int>(elites.cols());
  config.validate();
  e.config_ = config;
  for (int k = 0; k < count; ++k) {
    e.members_.push_back(nn::load_mlp(ckpt, prefix + "/member" + std::to_string(k)));
    e.optimizers_.emplace_back(e.members_.back().params(), config.adam);
  }
  config.hidden_sizes = e.members_.front().spec().hidden_sizes;
  e.config_.hidden_sizes = config.hidden_sizes;
  for (Eigen::Index i = 0; i < elites.cols(); ++i) e.elites_.push_back(static_cast<int>(elites(0, i)));
  e.input_norm_.set(ckpt.get(prefix + "/input_mean").col(0), ckpt.get(prefix + "/input_std").col(0));
  e.target_norm_.set(ckpt.get(prefix + "/target_mean").col(0), ckpt.get(prefix + "/target_std").col(0));
  return e;
}

}  // namespace bidyn::dynamics
