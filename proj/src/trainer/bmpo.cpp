#include "bidyn/trainer/bmpo.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numeric>

#include "bidyn/common/errors.hpp"
#include "bidyn/env/pendulum.hpp"
#include "bidyn/rollout/bidirectional_rollout.hpp"
#include "bidyn/rollout/state_sampling.hpp"
#include "bidyn/trainer/evaluation.hpp"

namespace bidyn::trainer {

namespace {

std::unique_ptr<env::Environment> make(const EnvFactory& factory) {
  if (factory) return factory();
  return std::make_unique<env::Pendulum>();
}

policy::ActionBounds bounds_of(const env::EnvSpec& spec) {
  return {spec.action_low, spec.action_high};
}

policy::SacAgent make_agent(const TrainConfig& c, const env::EnvSpec& spec, const Rng& root) {
  Rng rng = root.substream("agent_init");
  return policy::SacAgent(spec.obs_dim, bounds_of(spec), c.sac, rng);
}

dynamics::ProbabilisticEnsemble make_model(const TrainConfig& c, const env::EnvSpec& spec,
                                           dynamics::Direction d, const Rng& root) {
  Rng rng = root.substream(d == dynamics::Direction::kForward ? "forward_init" : "backward_init");
  return dynamics::ProbabilisticEnsemble(d, spec.obs_dim, spec.act_dim, c.model, rng);
}

policy::BackwardPolicy make_backward_policy(const TrainConfig& c, const env::EnvSpec& spec,
                                            const Rng& root) {
  Rng rng = root.substream("backward_policy_init");
  return policy::BackwardPolicy(spec.obs_dim, bounds_of(spec), c.backward_policy, rng);
}

policy::Discriminator make_discriminator(const TrainConfig& c, const env::EnvSpec& spec,
                                         const Rng& root) {
  Rng rng = root.substream("discriminator_init");
  return policy::Discriminator(spec.obs_dim, spec.act_dim, c.backward_policy.hidden_sizes,
                               c.backward_policy.activation, c.discriminator_lr, rng);
}

mpc::MpcConfig effective_mpc(const TrainConfig& c) {
  mpc::MpcConfig m = c.mpc;
  if (c.ablation == Ablation::kNoMpc) m.enabled = false;
  return m;
}

double elite_mean(const dynamics::ProbabilisticEnsemble& model, const std::vector<double>& losses) {
  if (losses.empty()) return 0.0;
  double sum = 0.0;
  for (int e : model.elites()) sum += losses.at(static_cast<std::size_t>(e));
  return sum / static_cast<double>(model.elites().size());
}

}  // namespace

std::optional<long long> RunResult::first_steps_reaching(double threshold) const {
  for (const auto& r : rows)
    if (r.eval_return_mean >= threshold) return r.env_steps;
  return std::nullopt;
}

double RunResult::best_return() const {
  double best = -std::numeric_limits<double>::infinity();
  for (const auto& r : rows) best = std::max(best, r.eval_return_mean);
  return best;
}

std::uint64_t seed_from_environment(std::uint64_t fallback) {
  const char* v = std::getenv("BIDYN_SEED");
  if (v == nullptr || *v == '\0') return fallback;
  char* end = nullptr;
  const unsigned long long s = std::strtoull(v, &end, 10);
  if (end == v || *end != '\0') return fallback;
  return static_cast<std::uint64_t>(s);
}

BmpoTrainer::BmpoTrainer(TrainConfig config, std::string out_dir, EnvFactory make_env)
    : config_((config.finalize(), std::move(config))),
      out_dir_(std::move(out_dir)),
      env_(make(make_env)),
      eval_env_(make(make_env)),
      root_(config_.seed),
      act_rng_(root_.substream("act")),
      model_rng_(root_.substream("model_train")),
      rollout_rng_(root_.substream("rollout")),
      sac_rng_(root_.substream("sac")),
      bpolicy_rng_(root_.substream("backward_policy")),
      agent_(make_agent(config_, env_->spec(), root_)),
      forward_(make_model(config_, env_->spec(), dynamics::Direction::kForward, root_)),
      backward_(make_model(config_, env_->spec(), dynamics::Direction::kBackward, root_)),
      backward_policy_(make_backward_policy(config_, env_->spec(), root_)),
      discriminator_(make_discriminator(config_, env_->spec(), root_)),
      planner_(effective_mpc(config_)),
      env_buffer_(config_.env_buffer_capacity),
      model_buffer_(config_.model_buffer_capacity) {
  env_->spec().validate();
  if (!out_dir_.empty()) {
    std::error_code ec;
    std::filesystem::create_directories(out_dir_, ec);
    std::ofstream probe(out_dir_ + "/config.txt");
    if (ec || !probe) throw IoError("output directory '" + out_dir_ + "' is not writable");
    probe << to_text(config_);
    if (!probe) throw IoError("cannot write config to '" + out_dir_ + "'");
  }
}

void BmpoTrainer::train_models(MetricsRow& row) {
  const std::vector<Transition> data = env_buffer_.to_vector();
  if (data.size() < static_cast<std::size_t>(std::max(config_.model.min_train_size, 2))) return;
  dynamics::TrainOptions options;
  options.max_epochs = config_.model_max_epochs;
  Rng fwd_rng = model_rng_.substream("forward", counters_.forward_model_trainings);
  row.fwd_val_loss = elite_mean(forward_, forward_.train(data, options, fwd_rng).validation_loss);
  ++counters_.forward_model_trainings;
  if (config_.ablation != Ablation::kForwardOnly) {
    Rng bwd_rng = model_rng_.substream("backward", counters_.backward_model_trainings);
    row.bwd_val_loss = elite_mean(backward_, backward_.train(data, options, bwd_rng).validation_loss);
    ++counters_.backward_model_trainings;
  }
}

Vector BmpoTrainer::choose_action(const Vector& obs) {
  if (planner_.config().active() && forward_.ready()) {
    ++counters_.mpc_calls;
    return planner_.plan_action(obs, agent_, forward_, act_rng_);
  }
  return agent_.act(obs, false, act_rng_);
}

void BmpoTrainer::model_rollouts(int k1, int k2, double beta) {
  if (config_.rollouts_per_step == 0) return;
  if (k1 > 0 && !backward_.ready()) k1 = 0;
  if (k2 > 0 && !forward_.ready()) k2 = 0;
  if (k1 == 0 && k2 == 0) return;
  const ValueFn value = [this](const Matrix& states) {
    return agent_.estimate_values(states, config_.value_samples, rollout_rng_);
  };
  const Matrix starts =
      boltzmann_sample_states(env_buffer_, value, beta,
                              static_cast<std::size_t>(config_.rollouts_per_step), rollout_rng_,
                              config_.candidate_pool);
  std::vector<Transition> out =
      bidirectional_rollouts(starts, k1, k2, forward_, backward_, agent_.actor(),
                             backward_policy_.head(), rollout_rng_);
  for (auto& t : out) {
    if (!t.s.allFinite() || !t.s_next.allFinite() || !std::isfinite(t.r))
      throw NumericalError("model rollout produced a non-finite transition");
    if (t.source == TransitionSource::kModelBackward) ++counters_.backward_rollout_transitions;
    else ++counters_.forward_rollout_transitions;
    model_buffer_.push(std::move(t));
  }
}

void BmpoTrainer::sac_updates(EpochLosses& losses) {
  if (model_buffer_.empty() && config_.real_ratio <= 0.0) return;
  const auto batch = static_cast<std::size_t>(config_.sac_batch_size);
  const std::size_t n_real =
      model_buffer_.empty() ? batch
                            : static_cast<std::size_t>(std::lround(config_.real_ratio * batch));
  for (int g = 0; g < config_.policy_grad_steps; ++g) {
    std::vector<const Transition*> items = env_buffer_.sample(n_real, sac_rng_);
    if (n_real < batch) {
      auto model_items = model_buffer_.sample(batch - n_real, sac_rng_);
      items.insert(items.end(), model_items.begin(), model_items.end());
    }
    const policy::SacLossReport report = agent_.update(policy::SacBatch::from(items), sac_rng_);
    losses.q_loss += 0.5 * (report.q1_loss + report.q2_loss);
    losses.pi_loss += report.pi_loss;
    ++losses.updates;
    ++counters_.sac_updates;
  }
}

void BmpoTrainer::backward_policy_updates() {
  if (config_.ablation == Ablation::kForwardOnly || config_.backward_policy_steps == 0) return;
  const std::vector<Transition> recent = env_buffer_.recent(config_.backward_window);
  if (recent.empty()) return;
  for (int g = 0; g < config_.backward_policy_steps; ++g) {
    if (config_.backward_loss == BackwardLoss::kGan)
      policy::train_backward_policy_gan(backward_policy_, discriminator_, recent, bpolicy_rng_);
    else
      backward_policy_.mle_step(recent, bpolicy_rng_);
    ++counters_.backward_policy_updates;
  }
}

void BmpoTrainer::save(nn::Checkpoint& ckpt) const {
  agent_.save(ckpt, "agent");
  backward_policy_.save(ckpt, "backward_policy");
  if (forward_.ready()) forward_.save(ckpt, "forward_model");
  if (backward_.ready()) backward_.save(ckpt, "backward_model");
  ckpt.put_scalar("env_steps", static_cast<double>(counters_.env_steps));
}

void BmpoTrainer::write_checkpoint(const std::string& name) const {
  if (out_dir_.empty()) return;
  nn::Checkpoint ckpt;
  save(ckpt);
  ckpt.save(out_dir_ + "/" + name);
}

RunResult BmpoTrainer::run() {
  RunResult result;
  std::unique_ptr<MetricsWriter> writer;
  if (!out_dir_.empty()) writer = std::make_unique<MetricsWriter>(out_dir_ + "/metrics.csv");

  const int max_len = env_->spec().max_episode_steps;
  std::uint64_t episode = 0;
  Vector obs = env_->reset(mix_seed(config_.seed, "train_episode", episode));
  int episode_len = 0;

  try {
    for (int epoch = 0; epoch < config_.n_epochs; ++epoch) {
      MetricsRow row;
      row.epoch = epoch;
      row.k1 = config_.ablation == Ablation::kForwardOnly ? 0 : config_.k1.rollout_length(epoch);
      row.k2 = config_.ablation == Ablation::kBackwardOnly ? 0 : config_.k2.rollout_length(epoch);
      row.beta = config_.beta.value(epoch);
      train_models(row);

      EpochLosses losses;
      for (int step = 0; step < config_.env_steps_per_epoch; ++step) {
        const Vector action = choose_action(obs);
        const env::StepResult r = env_->step(action);
        env_buffer_.push({obs, action, r.reward, r.observation, r.done, TransitionSource::kEnv});
        ++counters_.env_steps;
        obs = r.observation;
        if (r.done || ++episode_len >= max_len) {
          obs = env_->reset(mix_seed(config_.seed, "train_episode", ++episode));
          episode_len = 0;
        }
        model_rollouts(row.k1, row.k2, row.beta);
        sac_updates(losses);
        backward_policy_updates();
      }

      const std::uint64_t mpc_before = planner_.calls();
      const EvalStats eval =
          evaluate_policy(agent_, *eval_env_, config_.eval_episodes, config_.eval_seed);
      counters_.mpc_calls_during_eval += planner_.calls() - mpc_before;

      row.env_steps = static_cast<long long>(counters_.env_steps);
      row.eval_return_mean = eval.mean;
      row.eval_return_std = eval.std;
      row.alpha = agent_.alpha();
      if (losses.updates > 0) {
        row.q_loss = losses.q_loss / losses.updates;
        row.pi_loss = losses.pi_loss / losses.updates;
      }
      result.rows.push_back(row);
      if (writer) writer->append(row);
      write_checkpoint("last_good.ckpt");
      if (config_.stop_return && eval.mean >= *config_.stop_return) {
        result.stopped_early = true;
        break;
      }
    }
  } catch (const NumericalError& e) {
    if (!out_dir_.empty()) {
      std::ofstream diag(out_dir_ + "/diagnostic.txt");
      diag << "numerical failure after " << counters_.env_steps << " env steps: " << e.what()
           << "\n";
    }
    throw;
  }
  write_checkpoint("final.ckpt");
  return result;
}

}  // namespace bidyn::trainer
