#pragma once

#include "bidyn/dynamics/model.hpp"

namespace bidyn::dynamics {

// Ground-truth pendulum dynamics in observation space. The backward
// direction inverts the integrator exactly while the velocity clip is
// inactive. Sampling is deterministic.
class ExactPendulumModel final : public DynamicsModel {
 public:
  explicit ExactPendulumModel(Direction direction) : direction_(direction) {}

  Direction direction() const override { return direction_; }
  int state_dim() const override { return 3; }
  int action_dim() const override { return 1; }
  bool ready() const override { return true; }
  int draw_member(Rng&) const override { return 0; }

  ModelStep sample(const Matrix& states, const Matrix& actions, std::span<const int> members,
                   Rng& rng) const override;
  ModelStep mean(const Matrix& states, const Matrix& actions) const override;

 private:
  Direction direction_;
};

}  // namespace bidyn::dynamics
