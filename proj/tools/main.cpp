#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "bidyn/bounds/verify.hpp"
#include "bidyn/common/errors.hpp"
#include "bidyn/env/pendulum.hpp"
#include "bidyn/nn/checkpoint.hpp"
#include "bidyn/trainer/bmpo.hpp"
#include "bidyn/trainer/compounding_error.hpp"
#include "bidyn/trainer/evaluation.hpp"

namespace fs = std::filesystem;
using namespace bidyn;

namespace {

// Training config stored next to a checkpoint, else the preset.
trainer::TrainConfig config_for_checkpoint(const std::string& checkpoint,
                                           const std::string& explicit_config) {
  if (!explicit_config.empty()) return trainer::load_config(explicit_config);
  const fs::path sibling = fs::path(checkpoint).parent_path() / "config.txt";
  if (fs::exists(sibling)) return trainer::load_config(sibling.string());
  return trainer::pendulum_preset();
}

policy::SacAgent load_agent(const nn::Checkpoint& ckpt, const trainer::TrainConfig& config,
                            const env::EnvSpec& spec) {
  Rng rng(0);
  policy::SacAgent agent(spec.obs_dim, {spec.action_low, spec.action_high}, config.sac, rng);
  agent.load(ckpt, "agent");
  return agent;
}

nlohmann::json check_json(const bounds::CheckStats& c) {
  return {{"name", c.name},
          {"checked", c.checked},
          {"violations", c.violations},
          {"worst_slack", c.worst_slack},
          {"max_ratio", c.max_ratio}};
}

int run_train(const std::string& config_path, std::optional<std::uint64_t> seed,
              const std::string& out_dir, const std::string& ablation,
              const std::string& backward_policy, std::optional<int> epochs) {
  trainer::TrainConfig config =
      config_path.empty() ? trainer::pendulum_preset() : trainer::load_config(config_path);
  config.seed = trainer::seed_from_environment(config.seed);
  if (seed) config.seed = *seed;
  if (!ablation.empty()) config.ablation = trainer::ablation_from_string(ablation);
  if (!backward_policy.empty()) config.backward_loss = trainer::backward_loss_from_string(backward_policy);
  if (epochs) config.n_epochs = *epochs;

  trainer::BmpoTrainer bmpo(config, out_dir);
  std::cout << "training seed=" << bmpo.config().seed
            << " ablation=" << trainer::to_string(bmpo.config().ablation) << " out=" << out_dir
            << "\n";
  const trainer::RunResult result = bmpo.run();
  for (const auto& row : result.rows)
    std::printf("epoch %2d  steps %5lld  return %9.2f +- %7.2f  k1 %d k2 %d\n", row.epoch,
                row.env_steps, row.eval_return_mean, row.eval_return_std, row.k1, row.k2);
  return 0;
}

int run_eval(const std::string& checkpoint, const std::string& config_path, int episodes,
             std::uint64_t seed) {
  const trainer::TrainConfig config = config_for_checkpoint(checkpoint, config_path);
  const nn::Checkpoint ckpt = nn::Checkpoint::load(checkpoint);
  env::Pendulum env;
  const policy::SacAgent agent = load_agent(ckpt, config, env.spec());
  const trainer::EvalStats stats = trainer::evaluate_policy(agent, env, episodes, seed);
  std::printf("episodes %d\nmean_return %.6f\nstd_return %.6f\n", episodes, stats.mean, stats.std);
  return 0;
}

int run_model_error(const std::string& checkpoint, const std::string& config_path, int h,
                    int anchors, int episodes, std::uint64_t seed) {
  const trainer::TrainConfig config = config_for_checkpoint(checkpoint, config_path);
  const nn::Checkpoint ckpt = nn::Checkpoint::load(checkpoint);
  if (!ckpt.has("forward_model/trained") || !ckpt.has("backward_model/trained"))
    throw InputError("checkpoint '" + checkpoint + "' lacks trained forward and backward models");
  const auto fwd = dynamics::ProbabilisticEnsemble::load(ckpt, "forward_model", config.model);
  const auto bwd = dynamics::ProbabilisticEnsemble::load(ckpt, "backward_model", config.model);
  env::Pendulum env;
  const policy::SacAgent agent = load_agent(ckpt, config, env.spec());
  Rng act_rng(seed);
  const trainer::ActionFn act = [&](const Vector& obs) { return agent.act(obs, false, act_rng); };
  const auto trajectories = trainer::collect_trajectories(act, env, episodes, seed);
  std::size_t used = 0;
  const trainer::CompoundingError err = trainer::mean_compounding_error(
      fwd, bwd, trajectories, h, static_cast<std::size_t>(anchors), &used);
  std::printf("h %d\nanchors %zu\nerror_for %.6f\nerror_bi %.6f\n", h, used, err.forward,
              err.bidirectional);
  return 0;
}

int run_verify(const bounds::VerifyOptions& options, std::uint64_t seed, const std::string& out) {
  const bounds::VerifyReport report = bounds::verify_suite(options, seed);
  nlohmann::json j;
  j["parameters"] = {{"instances", options.n_instances},
                     {"seed", seed},
                     {"max_states", options.max_states},
                     {"max_actions", options.max_actions},
                     {"gamma", options.gamma},
                     {"tail_rel_tol", options.tail_rel_tol},
                     {"max_rollout", options.max_rollout},
                     {"horizon", report.horizon}};
  j["checks"] = nlohmann::json::array();
  for (const bounds::CheckStats* c : report.checks()) j["checks"].push_back(check_json(*c));
  j["reversal_consistency"] = report.reversal_consistency;
  j["total_violations"] = report.total_violations();
  const std::string text = j.dump(2);
  if (out.empty()) {
    std::cout << text << "\n";
  } else {
    std::ofstream f(out);
    if (!f) throw IoError("cannot write report to '" + out + "'");
    f << text << "\n";
    for (const bounds::CheckStats* c : report.checks())
      std::printf("%-30s checked %6d  violations %d  worst slack %.3e  max lhs/rhs %.4f\n",
                  c->name.c_str(), c->checked, c->violations, c->worst_slack, c->max_ratio);
  }
  return report.total_violations() == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bidirectional model-based policy optimization"};
  app.require_subcommand(1);

  std::string config_path, out_dir = "runs/latest", ablation, backward_policy;
  std::optional<std::uint64_t> seed;
  std::optional<int> epochs;
  auto* train = app.add_subcommand("train", "Train on Pendulum");
  train->add_option("--config", config_path, "Config file (key = value)");
  train->add_option("--seed", seed, "Seed (overrides BIDYN_SEED and the config)");
  train->add_option("--out-dir", out_dir, "Output directory")->capture_default_str();
  train->add_option("--ablation", ablation, "full|forward-only|backward-only|no-mpc");
  train->add_option("--backward-policy", backward_policy, "mle|gan");
  train->add_option("--epochs", epochs, "Override the number of epochs");

  std::string checkpoint, model_config;
  int episodes = 10;
  std::uint64_t eval_seed = 1000003;
  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint deterministically");
  eval->add_option("--checkpoint", checkpoint, "Checkpoint file")->required();
  eval->add_option("--config", model_config, "Config used for training");
  eval->add_option("--episodes", episodes, "Episodes")->capture_default_str();
  eval->add_option("--seed", eval_seed, "Evaluation seed")->capture_default_str();

  int h = 5, anchors = 100, error_episodes = 5;
  std::uint64_t error_seed = 7;
  auto* model_error = app.add_subcommand("model-error", "Compounding error of saved models");
  model_error->set_help_flag("--help", "Print this help message and exit");
  model_error->add_option("--checkpoint", checkpoint, "Checkpoint file")->required();
  model_error->add_option("--config", model_config, "Config used for training");
  model_error->add_option("--h", h, "Half window length")->capture_default_str();
  model_error->add_option("--anchors", anchors, "Anchor states")->capture_default_str();
  model_error->add_option("--episodes", error_episodes, "Held-out episodes")->capture_default_str();
  model_error->add_option("--seed", error_seed, "Seed for held-out episodes")->capture_default_str();

  bounds::VerifyOptions verify_options;
  std::uint64_t verify_seed = 0;
  std::string report_path;
  auto* verify = app.add_subcommand("verify-bounds", "Check the return bounds on tabular MDPs");
  verify->add_option("--instances", verify_options.n_instances, "Random instances")->capture_default_str();
  verify->add_option("--seed", verify_seed, "Seed")->capture_default_str();
  verify->add_option("--max-states", verify_options.max_states, "Max states")->capture_default_str();
  verify->add_option("--max-actions", verify_options.max_actions, "Max actions")->capture_default_str();
  verify->add_option("--gamma", verify_options.gamma, "Discount")->capture_default_str();
  verify->add_option("--out", report_path, "Write the JSON report here");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*train) return run_train(config_path, seed, out_dir, ablation, backward_policy, epochs);
    if (*eval) return run_eval(checkpoint, model_config, episodes, eval_seed);
    if (*model_error)
      return run_model_error(checkpoint, model_config, h, anchors, error_episodes, error_seed);
    if (*verify) return run_verify(verify_options, verify_seed, report_path);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
