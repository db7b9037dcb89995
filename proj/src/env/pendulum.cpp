#include "bidyn/env/pendulum.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "bidyn/common/errors.hpp"

namespace bidyn::env {

void EnvSpec::validate() const {
  if (obs_dim < 1 || act_dim < 1) throw InputError("EnvSpec: dimensions must be >= 1");
  if (steps_per_epoch < 1) throw InputError("EnvSpec: steps_per_epoch must be >= 1");
  if (max_episode_steps < 1) throw InputError("EnvSpec: max_episode_steps must be >= 1");
  if (action_low.size() != act_dim || action_high.size() != act_dim)
    throw InputError("EnvSpec: action bounds must have act_dim entries");
  if (!(action_low.array() < action_high.array()).all())
    throw InputError("EnvSpec: action_low must be < action_high");
}

double wrap_angle(double theta) {
  constexpr double kPi = std::numbers::pi;
  double wrapped = std::fmod(theta + kPi, 2.0 * kPi);
  if (wrapped < 0.0) wrapped += 2.0 * kPi;
  return wrapped - kPi;
}

double clip_torque(double torque) {
  if (!std::isfinite(torque)) throw InputError("pendulum: non-finite action");
  return std::clamp(torque, -PendulumParams::kMaxTorque, PendulumParams::kMaxTorque);
}

double pendulum_reward(const PendulumState& s, double torque) {
  const double th = wrap_angle(s.theta);
  return -(th * th + 0.1 * s.theta_dot * s.theta_dot + 0.001 * torque * torque);
}

PendulumState pendulum_dynamics(const PendulumState& s, double torque) {
  using P = PendulumParams;
  const double u = clip_torque(torque);
  const double accel = 3.0 * P::kGravity / (2.0 * P::kLength) * std::sin(s.theta) +
                       3.0 / (P::kMass * P::kLength * P::kLength) * u;
  PendulumState next;
  next.theta_dot = std::clamp(s.theta_dot + accel * P::kDt, -P::kMaxSpeed, P::kMaxSpeed);
  next.theta = wrap_angle(s.theta + next.theta_dot * P::kDt);
  return next;
}

Vector pendulum_observation(const PendulumState& s) {
  Vector obs(3);
  obs << std::cos(s.theta), std::sin(s.theta), s.theta_dot;
  return obs;
}

PendulumState pendulum_state_from_observation(const Vector& obs) {
  if (obs.size() != 3) throw InputError("pendulum: observation must have 3 entries");
  return {std::atan2(obs[1], obs[0]), obs[2]};
}

double pendulum_energy(const PendulumState& s) {
  using P = PendulumParams;
  return 0.5 * s.theta_dot * s.theta_dot +
         3.0 * P::kGravity / (2.0 * P::kLength) * std::cos(s.theta);
}

double pendulum_energy_drift_bound(const PendulumState& next) {
  using P = PendulumParams;
  const double k = 3.0 * P::kGravity / (2.0 * P::kLength);
  return 0.5 * k * P::kDt * P::kDt * (k + next.theta_dot * next.theta_dot);
}

Pendulum::Pendulum() {
  spec_.obs_dim = 3;
  spec_.act_dim = 1;
  spec_.steps_per_epoch = PendulumParams::kEpisodeLength;
  spec_.max_episode_steps = PendulumParams::kEpisodeLength;
  spec_.action_low = Vector::Constant(1, -PendulumParams::kMaxTorque);
  spec_.action_high = Vector::Constant(1, PendulumParams::kMaxTorque);
  spec_.has_termination = false;
}

Vector Pendulum::reset(std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> angle(-std::numbers::pi, std::numbers::pi);
  std::uniform_real_distribution<double> speed(-PendulumParams::kInitSpeed,
                                               PendulumParams::kInitSpeed);
  state_.theta = angle(gen);
  state_.theta_dot = speed(gen);
  return pendulum_observation(state_);
}

void Pendulum::set_state(const PendulumState& state) {
  state_ = {wrap_angle(state.theta),
            std::clamp(state.theta_dot, -PendulumParams::kMaxSpeed, PendulumParams::kMaxSpeed)};
}

StepResult Pendulum::step_from(const PendulumState& state, const Vector& action,
                               PendulumState* next) {
  if (action.size() != 1) throw InputError("pendulum: action must have 1 entry");
  const double u = clip_torque(action[0]);
  StepResult result;
  result.reward = pendulum_reward(state, u);
  *next = pendulum_dynamics(state, u);
  result.observation = pendulum_observation(*next);
  result.done = false;
  return result;
}

StepResult Pendulum::step(const Vector& action) {
  PendulumState next;
  StepResult result = step_from(state_, action, &next);
  state_ = next;
  return result;
}

}  // namespace bidyn::env
