#pragma once

#include <vector>

#include "bidyn/dynamics/model.hpp"
#include "bidyn/policy/squashed_gaussian.hpp"
#include "bidyn/rollout/transition.hpp"

namespace bidyn {

// k1 backward steps driven by the backward policy, then k2 forward steps from
// the same start driven by the forward policy. Backward transitions come
// first, in generation order; all are marked done = false. A model is only
// required to be trained when its leg is non-empty (StateError otherwise).
std::vector<Transition> bidirectional_rollout(const Vector& start, int k1, int k2,
                                              const dynamics::DynamicsModel& forward_model,
                                              const dynamics::DynamicsModel& backward_model,
                                              const policy::SquashedGaussianPolicy& forward_policy,
                                              const policy::SquashedGaussianPolicy& backward_policy,
                                              Rng& rng);

// Same for every column of `starts`, stepping all branches together. Each
// step of each branch uses an independently drawn model member.
std::vector<Transition> bidirectional_rollouts(const Matrix& starts, int k1, int k2,
                                               const dynamics::DynamicsModel& forward_model,
                                               const dynamics::DynamicsModel& backward_model,
                                               const policy::SquashedGaussianPolicy& forward_policy,
                                               const policy::SquashedGaussianPolicy& backward_policy,
                                               Rng& rng);

}  // namespace bidyn
