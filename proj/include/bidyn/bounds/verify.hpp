#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "bidyn/bounds/bound_rhs.hpp"
#include "bidyn/bounds/tabular.hpp"

namespace bidyn::bounds {

// Visitation-weighted divergences between two branched processes, measured
// under the marginals of the first: for each segment, the max over its
// timesteps of the expected TVD of the dynamics and of the policies.
// Backward terms are weighted by the (s_{t+1}, a_t) joint.
BoundInputs measure_epsilons(const BranchedProcess& p1, const BranchedProcess& p2,
                             const Vector& rho0, int horizon, double r_max, double gamma);

struct CheckStats {
  std::string name;
  int checked = 0;
  int violations = 0;
  // min over checks of (rhs - lhs); +inf when nothing was checked.
  double worst_slack = 0.0;
  // max of lhs / rhs over checks with rhs > 1e-9.
  double max_ratio = 0.0;

  void record(double lhs, double rhs, double tolerance);
};

struct VerifyOptions {
  int n_instances = 100;
  int max_states = 5;
  int max_actions = 3;
  double gamma = 0.9;
  // Horizon T is the smallest with gamma^T / (1 - gamma) below this.
  double tail_rel_tol = 1e-6;
  int max_rollout = 4;

  void validate() const;
};

struct VerifyReport {
  VerifyOptions options;
  std::uint64_t seed = 0;
  int horizon = 0;
  CheckStats general{"general_return_bound"};
  CheckStats bidirectional{"bidirectional_return_bound"};
  CheckStats mbpo{"mbpo_return_bound"};
  CheckStats joint_tvd{"joint_tvd_lemma"};
  CheckStats backward_marginal{"backward_marginal_recursion"};
  CheckStats tightness{"bidirectional_le_mbpo_grid"};
  // Largest |eta[pi] - branched return| of the unperturbed reversal process.
  double reversal_consistency = 0.0;

  std::vector<const CheckStats*> checks() const;
  int total_violations() const;
};

// Runs the randomized soundness checks on n_instances tabular instances and
// the tightness sweep. Return-bound checks add the truncation allowance
// 2 r_max gamma^T / (1 - gamma) to the left side unless every measured
// divergence is zero; the others are exact up to 1e-12.
VerifyReport verify_suite(const VerifyOptions& options, std::uint64_t seed);

}  // namespace bidyn::bounds
