#include "bidyn/policy/backward_policy.hpp"

#include <algorithm>
#include <cmath>

#include "bidyn/common/errors.hpp"
#include "bidyn/nn/gaussian.hpp"

namespace bidyn::policy {

namespace {

struct PairBatch {
  Matrix actions;
  Matrix next_states;
};

PairBatch minibatch(std::span<const Transition> data, int batch_size, Rng& rng) {
  const auto n = std::min<std::size_t>(data.size(), static_cast<std::size_t>(batch_size));
  PairBatch b;
  b.actions.resize(data.front().a.size(), static_cast<Eigen::Index>(n));
  b.next_states.resize(data.front().s_next.size(), static_cast<Eigen::Index>(n));
  for (std::size_t j = 0; j < n; ++j) {
    const Transition& t = n == data.size() ? data[j] : data[rng.index(data.size())];
    b.actions.col(static_cast<Eigen::Index>(j)) = t.a;
    b.next_states.col(static_cast<Eigen::Index>(j)) = t.s_next;
  }
  return b;
}

PairBatch all_pairs(std::span<const Transition> data) {
  PairBatch b;
  b.actions.resize(data.front().a.size(), static_cast<Eigen::Index>(data.size()));
  b.next_states.resize(data.front().s_next.size(), static_cast<Eigen::Index>(data.size()));
  for (std::size_t j = 0; j < data.size(); ++j) {
    b.actions.col(static_cast<Eigen::Index>(j)) = data[j].a;
    b.next_states.col(static_cast<Eigen::Index>(j)) = data[j].s_next;
  }
  return b;
}

// Keeps recorded actions strictly inside the box so the squashed density
// is finite.
Matrix clamp_inside(const Matrix& actions, const ActionBounds& bounds) {
  Matrix out = actions;
  const Vector c = bounds.center();
  const Vector h = bounds.half_range() * (1.0 - 1e-6);
  for (Eigen::Index i = 0; i < out.rows(); ++i)
    out.row(i) = out.row(i).cwiseMax(c[i] - h[i]).cwiseMin(c[i] + h[i]);
  return out;
}

}  // namespace

BackwardPolicy::BackwardPolicy(int obs_dim, ActionBounds bounds, BackwardPolicyConfig config,
                               Rng& rng)
    : config_(std::move(config)),
      head_(obs_dim, std::move(bounds), config_.hidden_sizes, config_.activation, rng),
      opt_(head_.net().params(), {config_.lr}) {
  if (config_.batch_size < 1) throw InputError("BackwardPolicy: batch_size must be >= 1");
}

Matrix BackwardPolicy::sample(const Matrix& next_states, Rng& rng) const {
  return head_.sample(next_states, rng).actions;
}

Vector BackwardPolicy::sample(const Vector& next_state, Rng& rng) const {
  return sample(Matrix(next_state), rng).col(0);
}

double BackwardPolicy::nll(std::span<const Transition> data) const {
  if (data.empty()) throw PreconditionError("BackwardPolicy::nll: empty data");
  const PairBatch b = all_pairs(data);
  return head_.nll(b.next_states, clamp_inside(b.actions, head_.bounds()), nullptr);
}

double BackwardPolicy::mle_step(std::span<const Transition> data, Rng& rng) {
  if (data.empty()) throw PreconditionError("BackwardPolicy::mle_step: empty data");
  const PairBatch b = minibatch(data, config_.batch_size, rng);
  nn::ParameterStore grads = head_.net().params().zeros_like();
  const double loss =
      head_.nll(b.next_states, clamp_inside(b.actions, head_.bounds()), &grads);
  if (!std::isfinite(loss)) throw NumericalError("BackwardPolicy: non-finite NLL");
  opt_.step(head_.net().params(), grads);
  return loss;
}

void BackwardPolicy::save(nn::Checkpoint& ckpt, const std::string& prefix) const {
  nn::save_mlp(ckpt, prefix + "/net", head_.net());
}

void BackwardPolicy::load(const nn::Checkpoint& ckpt, const std::string& prefix) {
  head_.set_net(nn::load_mlp(ckpt, prefix + "/net"));
  opt_ = nn::Adam(head_.net().params(), {config_.lr});
}

Discriminator::Discriminator(int obs_dim, int act_dim, std::vector<int> hidden,
                             nn::Activation activation, double lr, Rng& rng)
    : net_(nn::MlpSpec{obs_dim + act_dim, 1, std::move(hidden), activation}, rng),
      opt_(net_.params(), {lr}) {}

Vector Discriminator::logits(const Matrix& actions, const Matrix& next_states) const {
  Matrix x(actions.rows() + next_states.rows(), actions.cols());
  x.topRows(actions.rows()) = actions;
  x.bottomRows(next_states.rows()) = next_states;
  return net_.forward(x).row(0).transpose();
}

double discriminator_loss(const Vector& real_logits, const Vector& fake_logits) {
  if (real_logits.size() == 0 || fake_logits.size() == 0)
    throw PreconditionError("discriminator_loss: empty logits");
  return nn::softplus(Matrix(-real_logits)).mean() + nn::softplus(Matrix(fake_logits)).mean();
}

double generator_loss(const Vector& fake_logits) {
  if (fake_logits.size() == 0) throw PreconditionError("generator_loss: empty logits");
  // log(1 - sigmoid(x)) = -softplus(x)
  return -nn::softplus(Matrix(fake_logits)).mean();
}

namespace {

Matrix stack_pairs(const Matrix& actions, const Matrix& next_states) {
  Matrix x(actions.rows() + next_states.rows(), actions.cols());
  x.topRows(actions.rows()) = actions;
  x.bottomRows(next_states.rows()) = next_states;
  return x;
}

}  // namespace

double gan_discriminator_objective(const Discriminator& discriminator, const Matrix& real_actions,
                                   const Matrix& fake_actions, const Matrix& next_states,
                                   nn::ParameterStore* grads) {
  const nn::Mlp& dnet = discriminator.net();
  nn::Mlp::Cache real_cache, fake_cache;
  const Matrix real_logits = dnet.forward(stack_pairs(real_actions, next_states), &real_cache);
  const Matrix fake_logits = dnet.forward(stack_pairs(fake_actions, next_states), &fake_cache);
  const double loss =
      discriminator_loss(real_logits.row(0).transpose(), fake_logits.row(0).transpose());
  if (grads != nullptr) {
    const double inv_real = 1.0 / static_cast<double>(real_logits.cols());
    const double inv_fake = 1.0 / static_cast<double>(fake_logits.cols());
    // d softplus(-x)/dx = -sigmoid(-x); d softplus(x)/dx = sigmoid(x)
    dnet.backward(real_cache, -inv_real * nn::sigmoid(Matrix(-real_logits)), grads);
    dnet.backward(fake_cache, inv_fake * nn::sigmoid(fake_logits), grads);
  }
  return loss;
}

double gan_generator_objective(const BackwardPolicy& policy, const Discriminator& discriminator,
                               const Matrix& next_states, const Matrix& noise,
                               nn::ParameterStore* grads) {
  const nn::Mlp& dnet = discriminator.net();
  const auto pass = policy.head().sample(next_states, noise);
  nn::Mlp::Cache cache;
  const Matrix logits = dnet.forward(stack_pairs(pass.actions, next_states), &cache);
  const double loss = generator_loss(logits.row(0).transpose());
  if (grads != nullptr) {
    const Eigen::Index n = logits.cols();
    const Matrix dx = dnet.backward(cache, -nn::sigmoid(logits) / static_cast<double>(n), nullptr);
    policy.head().backward(pass, dx.topRows(pass.actions.rows()), Vector::Zero(n), grads);
  }
  return loss;
}

GanLosses train_backward_policy_gan(BackwardPolicy& policy, Discriminator& discriminator,
                                    std::span<const Transition> data, Rng& rng) {
  if (data.empty()) throw PreconditionError("train_backward_policy_gan: empty data");
  const PairBatch b = minibatch(data, policy.config().batch_size, rng);
  GanLosses out;
  {
    const Matrix fake = policy.sample(b.next_states, rng);
    nn::ParameterStore grads = discriminator.net().params().zeros_like();
    out.d_loss = gan_discriminator_objective(discriminator, b.actions, fake, b.next_states, &grads);
    if (!std::isfinite(out.d_loss)) throw NumericalError("GAN: non-finite discriminator loss");
    discriminator.optimizer().step(discriminator.net().params(), grads);
  }
  {
    const Matrix noise = rng.normal_matrix(policy.head().act_dim(), b.next_states.cols());
    nn::ParameterStore grads = policy.head().net().params().zeros_like();
    out.g_loss = gan_generator_objective(policy, discriminator, b.next_states, noise, &grads);
    if (!std::isfinite(out.g_loss)) throw NumericalError("GAN: non-finite generator loss");
    policy.optimizer().step(policy.head().net().params(), grads);
  }
  return out;
}

double train_backward_policy_mle(BackwardPolicy& policy, std::span<const Transition> data,
                                 int steps, Rng& rng) {
  if (data.empty()) throw PreconditionError("train_backward_policy_mle: empty data");
  for (int i = 0; i < steps; ++i) policy.mle_step(data, rng);
  return policy.nll(data);
}

}  // namespace bidyn::policy
