#include "bidyn/trainer/compounding_error.hpp"

#include <algorithm>
#include <utility>

#include "bidyn/common/errors.hpp"
#include "bidyn/common/random.hpp"

namespace bidyn::trainer {

namespace {

Vector mean_step(const dynamics::DynamicsModel& model, const Vector& s, const Vector& a) {
  return model.mean(Matrix(s), Matrix(a)).states.col(0);
}

}  // namespace

std::vector<Trajectory> collect_trajectories(const ActionFn& act, env::Environment& env,
                                             int n_episodes, std::uint64_t seed) {
  if (n_episodes < 1) throw InputError("collect_trajectories: n_episodes must be >= 1");
  std::vector<Trajectory> out;
  for (int i = 0; i < n_episodes; ++i) {
    Trajectory traj;
    traj.states.push_back(env.reset(mix_seed(seed, "trajectory", static_cast<std::uint64_t>(i))));
    for (int t = 0; t < env.spec().max_episode_steps; ++t) {
      traj.actions.push_back(act(traj.states.back()));
      const env::StepResult r = env.step(traj.actions.back());
      traj.states.push_back(r.observation);
      if (r.done) break;
    }
    out.push_back(std::move(traj));
  }
  return out;
}

CompoundingError compounding_error(const dynamics::DynamicsModel& forward_model,
                                   const dynamics::DynamicsModel& backward_model,
                                   const Trajectory& trajectory, int h, std::size_t start) {
  if (h < 1) throw InputError("compounding_error: h must be >= 1");
  const std::size_t span = 2 * static_cast<std::size_t>(h);
  if (trajectory.actions.size() + 1 != trajectory.states.size())
    throw InputError("compounding_error: need one more state than actions");
  if (start + span >= trajectory.states.size())
    throw PreconditionError("compounding_error: trajectory shorter than 2h + 1 states");
  if (forward_model.direction() != dynamics::Direction::kForward ||
      backward_model.direction() != dynamics::Direction::kBackward)
    throw InputError("compounding_error: model directions swapped");

  const auto& s = trajectory.states;
  const auto& a = trajectory.actions;
  CompoundingError out;

  Vector pred = s[start];
  for (std::size_t i = 1; i <= span; ++i) {
    pred = mean_step(forward_model, pred, a[start + i - 1]);
    out.forward += (pred - s[start + i]).squaredNorm();
  }

  const std::size_t mid = start + static_cast<std::size_t>(h);
  pred = s[mid];
  for (std::size_t i = 1; i <= static_cast<std::size_t>(h); ++i) {
    pred = mean_step(forward_model, pred, a[mid + i - 1]);
    out.bidirectional += (pred - s[mid + i]).squaredNorm();
  }
  pred = s[mid];
  for (std::size_t i = 1; i <= static_cast<std::size_t>(h); ++i) {
    pred = mean_step(backward_model, pred, a[mid - i]);
    out.bidirectional += (pred - s[mid - i]).squaredNorm();
  }

  out.forward /= static_cast<double>(span);
  out.bidirectional /= static_cast<double>(span);
  return out;
}

CompoundingError mean_compounding_error(const dynamics::DynamicsModel& forward_model,
                                        const dynamics::DynamicsModel& backward_model,
                                        const std::vector<Trajectory>& trajectories, int h,
                                        std::size_t n_anchors, std::size_t* used) {
  if (n_anchors == 0) throw InputError("mean_compounding_error: n_anchors must be positive");
  std::vector<std::pair<std::size_t, std::size_t>> windows;
  const std::size_t span = 2 * static_cast<std::size_t>(std::max(h, 0));
  for (std::size_t t = 0; t < trajectories.size(); ++t)
    for (std::size_t start = 0; start + span < trajectories[t].states.size(); ++start)
      windows.emplace_back(t, start);
  if (windows.empty())
    throw PreconditionError("mean_compounding_error: no trajectory holds 2h + 1 states");

  const std::size_t k = std::min(n_anchors, windows.size());
  CompoundingError sum;
  for (std::size_t i = 0; i < k; ++i) {
    const auto& [t, start] = windows[i * windows.size() / k];
    const CompoundingError e = compounding_error(forward_model, backward_model, trajectories[t], h, start);
    sum.forward += e.forward;
    sum.bidirectional += e.bidirectional;
  }
  if (used != nullptr) *used = k;
  sum.forward /= static_cast<double>(k);
  sum.bidirectional /= static_cast<double>(k);
  return sum;
}

}  // namespace bidyn::trainer
