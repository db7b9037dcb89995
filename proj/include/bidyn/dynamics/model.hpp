#pragma once

#include <span>
#include <string>

#include "bidyn/common/random.hpp"
#include "bidyn/common/types.hpp"

namespace bidyn::dynamics {

// Forward models predict s' from (s, a); backward models predict s from (s', a).
enum class Direction { kForward, kBackward };

std::string to_string(Direction d);

// Batched one-step prediction: conditioned-on states in, predicted
// neighbouring states (absolute) and rewards out, one column per sample.
struct ModelStep {
  Matrix states;
  Vector rewards;
};

// A one-step dynamics model usable by rollouts, MPC and error metrics. The
// learned ensemble is the production implementation; exact models stand in
// for it in tests and oracles.
class DynamicsModel {
 public:
  virtual ~DynamicsModel() = default;

  virtual Direction direction() const = 0;
  virtual int state_dim() const = 0;
  virtual int action_dim() const = 0;
  virtual bool ready() const = 0;

  // Draws a member (an elite for ensembles) uniformly.
  virtual int draw_member(Rng& rng) const = 0;

  // Stochastic prediction. `members` holds one member index per column, or
  // is empty to draw a random member per column.
  virtual ModelStep sample(const Matrix& states, const Matrix& actions,
                           std::span<const int> members, Rng& rng) const = 0;

  // Deterministic prediction (mean over elite members for ensembles).
  virtual ModelStep mean(const Matrix& states, const Matrix& actions) const = 0;
};

}  // namespace bidyn::dynamics
