#pragma once

#include <cstdint>

#include "bidyn/env/environment.hpp"

namespace bidyn::env {

// Classic pendulum swing-up: a rigid rod hinged at one end, theta measured
// from upright.
//
//   theta_dot' = clip(theta_dot + (3 g / (2 l) sin(theta) + 3 / (m l^2) u) dt, -8, 8)
//   theta'     = wrap(theta + theta_dot' dt)
//   reward     = -(theta^2 + 0.1 theta_dot^2 + 0.001 u^2), evaluated on the
//                pre-step state with the clipped torque u in [-2, 2]
//
// g = 10, m = 1, l = 1, dt = 0.05. Observation is (cos theta, sin theta,
// theta_dot); episodes last 200 steps and never terminate early. Initial
// states: theta ~ U[-pi, pi], theta_dot ~ U[-1, 1].
//
// Energy: with u = 0 the conserved quantity is e = theta_dot^2 / 2 + k cos(theta),
// k = 3 g / (2 l). Semi-implicit Euler changes it per step by
//   |de| <= k dt^2 (k + theta_dot'^2) / 2
// as long as the velocity clip is inactive.
struct PendulumParams {
  static constexpr double kGravity = 10.0;
  static constexpr double kMass = 1.0;
  static constexpr double kLength = 1.0;
  static constexpr double kDt = 0.05;
  static constexpr double kMaxTorque = 2.0;
  static constexpr double kMaxSpeed = 8.0;
  static constexpr double kInitSpeed = 1.0;
  static constexpr int kEpisodeLength = 200;
};

struct PendulumState {
  double theta = 0.0;
  double theta_dot = 0.0;
};

double wrap_angle(double theta);

// Reward of the pre-step state under an (already clipped) torque.
double pendulum_reward(const PendulumState& state, double torque);

// One integration step with torque clipping. Throws InputError on a
// non-finite torque.
PendulumState pendulum_dynamics(const PendulumState& state, double torque);

double clip_torque(double torque);

Vector pendulum_observation(const PendulumState& state);
PendulumState pendulum_state_from_observation(const Vector& obs);

// Conserved energy (per unit inertia) of the torque-free pendulum.
double pendulum_energy(const PendulumState& state);

// Per-step energy drift bound for the torque-free semi-implicit integrator.
double pendulum_energy_drift_bound(const PendulumState& next);

class Pendulum final : public Environment {
 public:
  Pendulum();

  const EnvSpec& spec() const override { return spec_; }
  Vector reset(std::uint64_t seed) override;
  StepResult step(const Vector& action) override;

  // Raw state access for tests and exact-model oracles.
  const PendulumState& state() const { return state_; }
  void set_state(const PendulumState& state);
  static StepResult step_from(const PendulumState& state, const Vector& action,
                              PendulumState* next);

 private:
  EnvSpec spec_;
  PendulumState state_;
};

}  // namespace bidyn::env
