#include "bidyn/policy/sac.hpp"

#include <cmath>

#include "bidyn/common/errors.hpp"

namespace bidyn::policy {

void SacConfig::validate() const {
  if (!(gamma >= 0.0 && gamma < 1.0)) throw InputError("SacConfig: gamma must be in [0, 1)");
  if (!(tau > 0.0 && tau <= 1.0)) throw InputError("SacConfig: tau must be in (0, 1]");
  if (!(init_alpha > 0.0)) throw InputError("SacConfig: init_alpha must be positive");
}

SacBatch SacBatch::from(std::span<const Transition> transitions) {
  std::vector<const Transition*> ptrs;
  ptrs.reserve(transitions.size());
  for (const auto& t : transitions) ptrs.push_back(&t);
  return from(ptrs);
}

SacBatch SacBatch::from(const std::vector<const Transition*>& transitions) {
  SacBatch b;
  if (transitions.empty()) return b;
  const auto n = static_cast<Eigen::Index>(transitions.size());
  const auto ds = transitions.front()->s.size();
  const auto da = transitions.front()->a.size();
  b.s.resize(ds, n);
  b.a.resize(da, n);
  b.r.resize(n);
  b.s_next.resize(ds, n);
  b.done.resize(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const Transition& t = *transitions[j];
    if (t.s.size() != ds || t.a.size() != da || t.s_next.size() != ds)
      throw InputError("SacBatch: inconsistent transition dimensions");
    b.s.col(j) = t.s;
    b.a.col(j) = t.a;
    b.r[j] = t.r;
    b.s_next.col(j) = t.s_next;
    b.done[j] = t.done ? 1.0 : 0.0;
  }
  return b;
}

SacAgent::SacAgent(int obs_dim, ActionBounds bounds, SacConfig config, Rng& rng)
    : config_(std::move(config)) {
  config_.validate();
  Rng actor_rng = rng.substream("actor");
  Rng critic_rng = rng.substream("critic");
  actor_ = SquashedGaussianPolicy(obs_dim, std::move(bounds), config_.hidden_sizes,
                                  config_.activation, actor_rng);
  const nn::MlpSpec q_spec{obs_dim + act_dim(), 1, config_.hidden_sizes, config_.activation};
  q1_ = nn::Mlp(q_spec, critic_rng);
  q2_ = nn::Mlp(q_spec, critic_rng);
  q1_target_ = q1_;
  q2_target_ = q2_;
  log_alpha_.add("log_alpha", Matrix::Constant(1, 1, std::log(config_.init_alpha)));
  target_entropy_ = config_.target_entropy.value_or(-static_cast<double>(act_dim()));
  actor_opt_ = nn::Adam(actor_.net().params(), {config_.actor_lr});
  q1_opt_ = nn::Adam(q1_.params(), {config_.critic_lr});
  q2_opt_ = nn::Adam(q2_.params(), {config_.critic_lr});
  alpha_opt_ = nn::Adam(log_alpha_, {config_.alpha_lr});
}

double SacAgent::alpha() const { return std::exp(log_alpha()); }

Matrix SacAgent::critic_input(const Matrix& obs, const Matrix& actions) const {
  Matrix x(obs.rows() + actions.rows(), obs.cols());
  x.topRows(obs.rows()) = obs;
  x.bottomRows(actions.rows()) = actions;
  return x;
}

Vector SacAgent::act(const Vector& obs, bool deterministic, Rng& rng) const {
  return act_batch(Matrix(obs), deterministic, rng).col(0);
}

Matrix SacAgent::act_batch(const Matrix& obs, bool deterministic, Rng& rng) const {
  if (!obs.allFinite()) throw InputError("SacAgent::act: non-finite observation");
  if (deterministic) return actor_.deterministic(obs);
  return actor_.sample(obs, rng).actions;
}

Vector SacAgent::min_q(const Matrix& obs, const Matrix& actions) const {
  const Matrix x = critic_input(obs, actions);
  return q1_.forward(x).row(0).cwiseMin(q2_.forward(x).row(0)).transpose();
}

double SacAgent::min_q(const Vector& obs, const Vector& action) const {
  return min_q(Matrix(obs), Matrix(action))[0];
}

Vector SacAgent::estimate_values(const Matrix& obs, int n_action_samples, Rng& rng) const {
  if (n_action_samples < 1) throw InputError("estimate_value: n_action_samples must be >= 1");
  const Eigen::Index n = obs.cols();
  const Matrix tiled = obs.replicate(1, n_action_samples);
  const auto pass = actor_.sample(tiled, rng);
  const Vector soft = min_q(tiled, pass.actions) - alpha() * pass.log_probs;
  Vector v = Vector::Zero(n);
  for (int k = 0; k < n_action_samples; ++k) v += soft.segment(k * n, n);
  return v / static_cast<double>(n_action_samples);
}

Vector SacAgent::estimate_values(const Matrix& obs, const Matrix& shared_noise) const {
  const Eigen::Index k = shared_noise.cols();
  if (k < 1 || shared_noise.rows() != act_dim())
    throw InputError("estimate_values: noise must be act_dim x samples with samples >= 1");
  const Eigen::Index n = obs.cols();
  Matrix noise(act_dim(), n * k);
  for (Eigen::Index i = 0; i < k; ++i) noise.middleCols(i * n, n) = shared_noise.col(i).replicate(1, n);
  const Matrix tiled = obs.replicate(1, k);
  const auto pass = actor_.sample(tiled, noise);
  const Vector soft = min_q(tiled, pass.actions) - alpha() * pass.log_probs;
  Vector v = Vector::Zero(n);
  for (Eigen::Index i = 0; i < k; ++i) v += soft.segment(i * n, n);
  return v / static_cast<double>(k);
}

double SacAgent::estimate_value(const Vector& obs, int n_action_samples, Rng& rng) const {
  return estimate_values(Matrix(obs), n_action_samples, rng)[0];
}

CriticLosses SacAgent::critic_loss(const SacBatch& batch, const Matrix& next_noise,
                                   nn::ParameterStore* grad_q1, nn::ParameterStore* grad_q2) const {
  const Eigen::Index n = batch.size();
  if (n == 0) throw PreconditionError("SacAgent::critic_loss: empty batch");
  const auto next = actor_.sample(batch.s_next, next_noise);
  const Matrix next_x = critic_input(batch.s_next, next.actions);
  const Vector next_q = q1_target_.forward(next_x).row(0).cwiseMin(q2_target_.forward(next_x).row(0)).transpose();
  const Vector soft_next = next_q - alpha() * next.log_probs;
  const Vector y = batch.r + (config_.gamma * (1.0 - batch.done.array()) * soft_next.array()).matrix();

  const Matrix x = critic_input(batch.s, batch.a);
  CriticLosses out;
  const double inv_n = 1.0 / static_cast<double>(n);
  auto one = [&](const nn::Mlp& q, nn::ParameterStore* grad) {
    nn::Mlp::Cache cache;
    const Matrix pred = q.forward(x, &cache);
    const Vector err = pred.row(0).transpose() - y;
    if (grad != nullptr) q.backward(cache, (2.0 * inv_n * err).transpose(), grad);
    return err.squaredNorm() * inv_n;
  };
  out.q1 = one(q1_, grad_q1);
  out.q2 = one(q2_, grad_q2);
  return out;
}

double SacAgent::actor_loss(const Matrix& obs, const Matrix& noise, nn::ParameterStore* grad,
                            Vector* log_probs) const {
  const Eigen::Index n = obs.cols();
  if (n == 0) throw PreconditionError("SacAgent::actor_loss: empty batch");
  const auto pass = actor_.sample(obs, noise);
  const Matrix x = critic_input(obs, pass.actions);
  nn::Mlp::Cache c1, c2;
  const Matrix v1 = q1_.forward(x, &c1);
  const Matrix v2 = q2_.forward(x, &c2);
  const double a = alpha();
  const double inv_n = 1.0 / static_cast<double>(n);
  double loss = 0.0;
  Matrix d1 = Matrix::Zero(1, n), d2 = Matrix::Zero(1, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const bool first = v1(0, j) <= v2(0, j);
    loss += a * pass.log_probs[j] - (first ? v1(0, j) : v2(0, j));
    (first ? d1 : d2)(0, j) = -inv_n;
  }
  loss *= inv_n;
  if (log_probs != nullptr) *log_probs = pass.log_probs;
  if (grad != nullptr) {
    const Matrix dx = q1_.backward(c1, d1, nullptr) + q2_.backward(c2, d2, nullptr);
    const Matrix d_actions = dx.bottomRows(act_dim());
    actor_.backward(pass, d_actions, Vector::Constant(n, a * inv_n), grad);
  }
  return loss;
}

double SacAgent::alpha_loss(const Vector& log_probs, double* grad_log_alpha) const {
  const double m = (log_probs.array() + target_entropy_).mean();
  if (grad_log_alpha != nullptr) *grad_log_alpha = -m;
  return -log_alpha() * m;
}

SacLossReport SacAgent::update(std::span<const Transition> batch, Rng& rng) {
  return update(SacBatch::from(batch), rng);
}

SacLossReport SacAgent::update(const SacBatch& batch, Rng& rng) {
  if (batch.size() == 0) throw PreconditionError("SacAgent::update: empty batch");
  SacLossReport report;

  nn::ParameterStore g1 = q1_.params().zeros_like();
  nn::ParameterStore g2 = q2_.params().zeros_like();
  const CriticLosses cl = critic_loss(batch, rng.normal_matrix(act_dim(), batch.size()), &g1, &g2);
  if (!std::isfinite(cl.q1) || !std::isfinite(cl.q2))
    throw NumericalError("SacAgent::update: non-finite critic loss");
  q1_opt_.step(q1_.params(), g1);
  q2_opt_.step(q2_.params(), g2);

  nn::ParameterStore ga = actor_.net().params().zeros_like();
  Vector log_probs;
  const double pi_loss =
      actor_loss(batch.s, rng.normal_matrix(act_dim(), batch.size()), &ga, &log_probs);
  if (!std::isfinite(pi_loss)) throw NumericalError("SacAgent::update: non-finite actor loss");
  actor_opt_.step(actor_.net().params(), ga);

  double g_alpha = 0.0;
  const double a_loss = alpha_loss(log_probs, &g_alpha);
  nn::ParameterStore galpha = log_alpha_.zeros_like();
  galpha[0](0, 0) = g_alpha;
  alpha_opt_.step(log_alpha_, galpha);

  q1_target_.params().polyak_from(q1_.params(), config_.tau);
  q2_target_.params().polyak_from(q2_.params(), config_.tau);

  report.q1_loss = cl.q1;
  report.q2_loss = cl.q2;
  report.pi_loss = pi_loss;
  report.alpha_loss = a_loss;
  report.alpha = alpha();
  report.entropy = -log_probs.mean();
  return report;
}

void SacAgent::save(nn::Checkpoint& ckpt, const std::string& prefix) const {
  nn::save_mlp(ckpt, prefix + "/actor", actor_.net());
  nn::save_mlp(ckpt, prefix + "/q1", q1_);
  nn::save_mlp(ckpt, prefix + "/q2", q2_);
  nn::save_mlp(ckpt, prefix + "/q1_target", q1_target_);
  nn::save_mlp(ckpt, prefix + "/q2_target", q2_target_);
  ckpt.put_scalar(prefix + "/log_alpha", log_alpha());
  ckpt.put(prefix + "/action_low", actor_.bounds().low);
  ckpt.put(prefix + "/action_high", actor_.bounds().high);
}

void SacAgent::load(const nn::Checkpoint& ckpt, const std::string& prefix) {
  actor_.set_net(nn::load_mlp(ckpt, prefix + "/actor"));
  q1_ = nn::load_mlp(ckpt, prefix + "/q1");
  q2_ = nn::load_mlp(ckpt, prefix + "/q2");
  q1_target_ = nn::load_mlp(ckpt, prefix + "/q1_target");
  q2_target_ = nn::load_mlp(ckpt, prefix + "/q2_target");
  set_log_alpha(ckpt.get_scalar(prefix + "/log_alpha"));
  actor_opt_ = nn::Adam(actor_.net().params(), {config_.actor_lr});
  q1_opt_ = nn::Adam(q1_.params(), {config_.critic_lr});
  q2_opt_ = nn::Adam(q2_.params(), {config_.critic_lr});
  alpha_opt_ = nn::Adam(log_alpha_, {config_.alpha_lr});
}

}  // namespace bidyn::policy
