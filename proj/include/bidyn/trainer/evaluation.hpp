#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "bidyn/env/environment.hpp"
#include "bidyn/policy/sac.hpp"

namespace bidyn::trainer {

struct EvalStats {
  double mean = 0.0;
  double std = 0.0;  // population standard deviation
  std::vector<double> returns;
};

using ActionFn = std::function<Vector(const Vector&)>;

// Undiscounted returns of n_episodes full-length episodes. Episode i resets
// the environment with a seed derived from (seed, i).
EvalStats evaluate_policy(const ActionFn& act, env::Environment& env, int n_episodes,
                          std::uint64_t seed);

// Deterministic actions of the agent's actor; no planning, no exploration.
EvalStats evaluate_policy(const policy::SacAgent& agent, env::Environment& env, int n_episodes,
                          std::uint64_t seed);

}  // namespace bidyn::trainer
