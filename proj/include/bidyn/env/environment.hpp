#pragma once

#include <cstdint>

#include "bidyn/common/types.hpp"

namespace bidyn::env {

struct EnvSpec {
  int obs_dim = 0;
  int act_dim = 0;
  int steps_per_epoch = 0;
  int max_episode_steps = 0;
  Vector action_low;
  Vector action_high;
  bool has_termination = false;

  // Throws InputError when an invariant is violated.
  void validate() const;
};

struct StepResult {
  Vector observation;
  double reward = 0.0;
  bool done = false;
};

// Episodic continuous-control environment seen through observations only.
class Environment {
 public:
  virtual ~Environment() = default;

  virtual const EnvSpec& spec() const = 0;
  virtual Vector reset(std::uint64_t seed) = 0;
  virtual StepResult step(const Vector& action) = 0;
};

}  // namespace bidyn::env
