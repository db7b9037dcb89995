#pragma once

#include <cstdint>

#include "bidyn/dynamics/model.hpp"
#include "bidyn/policy/sac.hpp"

namespace bidyn::mpc {

struct MpcConfig {
  int horizon = 6;
  int n_candidates = 50;
  bool enabled = true;
  double gamma = 0.99;
  // Action samples behind the terminal soft-value estimate.
  int value_samples = 4;

  void validate() const;
  bool active() const { return enabled && horizon > 0; }
};

struct PlanResult {
  Vector action;
  // Empty when the planner was bypassed.
  Vector scores;
  Matrix first_actions;
  int best = -1;
};

// Policy-guided shooting: N action sequences are sampled by rolling the
// stochastic policy through the forward model (one member per candidate for
// the whole horizon); each is scored by discounted model reward plus the
// discounted soft value of its terminal state (estimated with action noise
// shared by all candidates), and the first action of the best one is
// returned.
class MpcPlanner {
 public:
  explicit MpcPlanner(MpcConfig config);

  const MpcConfig& config() const { return config_; }
  // Number of planning calls that went through the model.
  std::uint64_t calls() const { return calls_; }

  PlanResult plan(const Vector& state, const policy::SacAgent& agent,
                  const dynamics::DynamicsModel& forward_model, Rng& rng);
  Vector plan_action(const Vector& state, const policy::SacAgent& agent,
                     const dynamics::DynamicsModel& forward_model, Rng& rng) {
    return plan(state, agent, forward_model, rng).action;
  }

 private:
  MpcConfig config_;
  std::uint64_t calls_ = 0;
};

}  // namespace bidyn::mpc
