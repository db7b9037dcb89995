#include "bidyn/mpc/planner.hpp"

#include <cmath>
#include <limits>
#include <vector>

#include "bidyn/common/errors.hpp"

namespace bidyn::mpc {

void MpcConfig::validate() const {
  if (horizon < 0) throw InputError("MpcConfig: horizon must be >= 0");
  if (n_candidates < 1) throw InputError("MpcConfig: n_candidates must be >= 1");
  if (value_samples < 1) throw InputError("MpcConfig: value_samples must be >= 1");
  if (!(gamma >= 0.0 && gamma < 1.0)) throw InputError("MpcConfig: gamma must be in [0, 1)");
}

MpcPlanner::MpcPlanner(MpcConfig config) : config_(config) { config_.validate(); }

PlanResult MpcPlanner::plan(const Vector& state, const policy::SacAgent& agent,
                            const dynamics::DynamicsModel& forward_model, Rng& rng) {
  PlanResult result;
  if (!config_.active()) {
    result.action = agent.act(state, false, rng);
    return result;
  }
  if (!forward_model.ready()) throw StateError("MpcPlanner: forward model untrained");
  if (!state.allFinite()) throw InputError("MpcPlanner: non-finite state");
  ++calls_;

  const int n = config_.n_candidates;
  std::vector<int> members(static_cast<std::size_t>(n));
  for (auto& m : members) m = forward_model.draw_member(rng);

  Matrix cur = state.replicate(1, n);
  Vector scores = Vector::Zero(n);
  double discount = 1.0;
  for (int t = 0; t < config_.horizon; ++t) {
    const Matrix actions = agent.act_batch(cur, false, rng);
    if (t == 0) result.first_actions = actions;
    const dynamics::ModelStep step = forward_model.sample(cur, actions, members, rng);
    scores += discount * step.rewards;
    discount *= config_.gamma;
    cur = step.states;
  }
  // Common action noise across candidates keeps the terminal estimate from
  // drowning the reward differences in sampling noise.
  scores += discount * agent.estimate_values(cur, rng.normal_matrix(agent.act_dim(), config_.value_samples));
  // Diverging model rollouts score as worst.
  for (Eigen::Index j = 0; j < scores.size(); ++j)
    if (!std::isfinite(scores[j])) scores[j] = -std::numeric_limits<double>::infinity();

  Eigen::Index best = 0;
  scores.maxCoeff(&best);
  result.best = static_cast<int>(best);
  result.scores = std::move(scores);
  result.action = result.first_actions.col(best);
  return result;
}

}  // namespace bidyn::mpc
