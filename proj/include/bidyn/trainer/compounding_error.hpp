#pragma once

#include <vector>

#include "bidyn/dynamics/model.hpp"
#include "bidyn/env/environment.hpp"
#include "bidyn/trainer/evaluation.hpp"

namespace bidyn::trainer {

// A real trajectory: states s_0..s_L and the actions a_0..a_{L-1} taken.
struct Trajectory {
  std::vector<Vector> states;
  std::vector<Vector> actions;
};

// Full-length episodes under `act`; episode i resets with a seed derived
// from (seed, i).
std::vector<Trajectory> collect_trajectories(const ActionFn& act, env::Environment& env,
                                             int n_episodes, std::uint64_t seed);

struct CompoundingError {
  double forward = 0.0;
  double bidirectional = 0.0;
};

// Multi-step mean-prediction error over the window s_start..s_{start+2h},
// driven by the recorded actions.
//   forward:       s^_0 = s_0, 2h forward steps, (1/2h) sum ||s^_i - s_i||^2
//   bidirectional: s^_h = s_h, h forward and h backward steps, same average
// Throws PreconditionError when the window does not fit the trajectory.
CompoundingError compounding_error(const dynamics::DynamicsModel& forward_model,
                                   const dynamics::DynamicsModel& backward_model,
                                   const Trajectory& trajectory, int h, std::size_t start = 0);

// Averages over `n_anchors` windows spread evenly over all windows that fit
// in the trajectories (every window when fewer exist).
CompoundingError mean_compounding_error(const dynamics::DynamicsModel& forward_model,
                                        const dynamics::DynamicsModel& backward_model,
                                        const std::vector<Trajectory>& trajectories, int h,
                                        std::size_t n_anchors, std::size_t* used = nullptr);

}  // namespace bidyn::trainer
