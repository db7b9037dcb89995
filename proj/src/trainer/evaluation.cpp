#include "bidyn/trainer/evaluation.hpp"

#include <cmath>

#include "bidyn/common/errors.hpp"
#include "bidyn/common/random.hpp"

namespace bidyn::trainer {

EvalStats evaluate_policy(const ActionFn& act, env::Environment& env, int n_episodes,
                          std::uint64_t seed) {
  if (n_episodes < 1) throw InputError("evaluate_policy: n_episodes must be >= 1");
  const int length = env.spec().max_episode_steps;
  EvalStats stats;
  for (int i = 0; i < n_episodes; ++i) {
    Vector obs = env.reset(mix_seed(seed, "eval_episode", static_cast<std::uint64_t>(i)));
    double ret = 0.0;
    for (int t = 0; t < length; ++t) {
      const env::StepResult r = env.step(act(obs));
      ret += r.reward;
      obs = r.observation;
      if (r.done) break;
    }
    stats.returns.push_back(ret);
  }
  double sum = 0.0;
  for (double r : stats.returns) sum += r;
  stats.mean = sum / n_episodes;
  double sq = 0.0;
  for (double r : stats.returns) sq += (r - stats.mean) * (r - stats.mean);
  stats.std = std::sqrt(sq / n_episodes);
  return stats;
}

EvalStats evaluate_policy(const policy::SacAgent& agent, env::Environment& env, int n_episodes,
                          std::uint64_t seed) {
  const ActionFn act = [&agent](const Vector& obs) {
    return Vector(agent.actor().deterministic(Matrix(obs)).col(0));
  };
  return evaluate_policy(act, env, n_episodes, seed);
}

}  // namespace bidyn::trainer
