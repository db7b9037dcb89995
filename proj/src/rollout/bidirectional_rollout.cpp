#include "bidyn/rollout/bidirectional_rollout.hpp"

#include "bidyn/common/errors.hpp"

namespace bidyn {

std::vector<Transition> bidirectional_rollout(const Vector& start, int k1, int k2,
                                              const dynamics::DynamicsModel& forward_model,
                                              const dynamics::DynamicsModel& backward_model,
                                              const policy::SquashedGaussianPolicy& forward_policy,
                                              const policy::SquashedGaussianPolicy& backward_policy,
                                              Rng& rng) {
  return bidirectional_rollouts(Matrix(start), k1, k2, forward_model, backward_model,
                                forward_policy, backward_policy, rng);
}

std::vector<Transition> bidirectional_rollouts(const Matrix& starts, int k1, int k2,
                                               const dynamics::DynamicsModel& forward_model,
                                               const dynamics::DynamicsModel& backward_model,
                                               const policy::SquashedGaussianPolicy& forward_policy,
                                               const policy::SquashedGaussianPolicy& backward_policy,
                                               Rng& rng) {
  if (k1 < 0 || k2 < 0) throw InputError("bidirectional_rollout: negative length");
  if (k1 == 0 && k2 == 0) throw InputError("bidirectional_rollout: k1 and k2 both zero");
  if (k1 > 0) {
    if (backward_model.direction() != dynamics::Direction::kBackward)
      throw InputError("bidirectional_rollout: backward leg needs a backward model");
    if (!backward_model.ready()) throw StateError("bidirectional_rollout: backward model untrained");
  }
  if (k2 > 0) {
    if (forward_model.direction() != dynamics::Direction::kForward)
      throw InputError("bidirectional_rollout: forward leg needs a forward model");
    if (!forward_model.ready()) throw StateError("bidirectional_rollout: forward model untrained");
  }

  const Eigen::Index n = starts.cols();
  std::vector<Transition> out;
  out.reserve(static_cast<std::size_t>(n) * static_cast<std::size_t>(k1 + k2));

  Matrix cur = starts;
  for (int i = 0; i < k1; ++i) {
    const Matrix actions = backward_policy.sample(cur, rng).actions;
    const dynamics::ModelStep step = backward_model.sample(cur, actions, {}, rng);
    for (Eigen::Index j = 0; j < n; ++j)
      out.push_back({step.states.col(j), actions.col(j), step.rewards[j], cur.col(j), false,
                     TransitionSource::kModelBackward});
    cur = step.states;
  }

  cur = starts;
  for (int i = 0; i < k2; ++i) {
    const Matrix actions = forward_policy.sample(cur, rng).actions;
    const dynamics::ModelStep step = forward_model.sample(cur, actions, {}, rng);
    for (Eigen::Index j = 0; j < n; ++j)
      out.push_back({cur.col(j), actions.col(j), step.rewards[j], step.states.col(j), false,
                     TransitionSource::kModelForward});
    cur = step.states;
  }
  return out;
}

}  // namespace bidyn
