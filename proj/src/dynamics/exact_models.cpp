#include "bidyn/dynamics/exact_models.hpp"

#include <cmath>

#include "bidyn/common/errors.hpp"
#include "bidyn/env/pendulum.hpp"

namespace bidyn::dynamics {

ModelStep ExactPendulumModel::sample(const Matrix& states, const Matrix& actions,
                                     std::span<const int>, Rng&) const {
  return mean(states, actions);
}

ModelStep ExactPendulumModel::mean(const Matrix& states, const Matrix& actions) const {
  using env::PendulumParams;
  if (states.rows() != 3 || actions.rows() != 1 || actions.cols() != states.cols())
    throw InputError("ExactPendulumModel: dimension mismatch");
  ModelStep out{Matrix(3, states.cols()), Vector(states.cols())};
  for (Eigen::Index j = 0; j < states.cols(); ++j) {
    const env::PendulumState given = env::pendulum_state_from_observation(states.col(j));
    const double u = env::clip_torque(actions(0, j));
    if (direction_ == Direction::kForward) {
      out.states.col(j) = env::pendulum_observation(env::pendulum_dynamics(given, u));
      out.rewards[j] = env::pendulum_reward(given, u);
    } else {
      env::PendulumState prev;
      prev.theta = env::wrap_angle(given.theta - given.theta_dot * PendulumParams::kDt);
      const double accel = 3.0 * PendulumParams::kGravity / (2.0 * PendulumParams::kLength) *
                               std::sin(prev.theta) +
                           3.0 / (PendulumParams::kMass * PendulumParams::kLength *
                                  PendulumParams::kLength) * u;
      prev.theta_dot = given.theta_dot - accel * PendulumParams::kDt;
      out.states.col(j) = env::pendulum_observation(prev);
      out.rewards[j] = env::pendulum_reward(prev, u);
    }
  }
  return out;
}

}  // namespace bidyn::dynamics
