#pragma once

#include <vector>

#include "bidyn/common/random.hpp"
#include "bidyn/common/types.hpp"

namespace bidyn::bounds {

// Forward kernel: p[a](s, s') = P(s' | s, a).
using ForwardKernel = std::vector<Matrix>;
// Backward kernel: q[a](s', s) = P(s | s', a).
using BackwardKernel = std::vector<Matrix>;
// Policy table: pi(s, a) = P(a | s). Backward policies are indexed by s'.
using PolicyTable = Matrix;

struct TabularMdp {
  int n_states = 0;
  int n_actions = 0;
  ForwardKernel transitions;
  Matrix reward;  // n_states x n_actions
  double gamma = 0.9;
  Vector rho0;

  double r_max() const;
  // Throws InputError on non-stochastic rows, bad shapes or gamma.
  void validate() const;
};

struct ReturnEstimate {
  double value = 0.0;
  // |infinite-horizon return - value| <= tail
  double tail = 0.0;
};

// (1/2) sum |p - q|. Throws InputError unless both are distributions.
double tv_distance(const Vector& p, const Vector& q);

// Sum_{t<T} gamma^t E[r(s_t, a_t)] under exact marginal propagation.
ReturnEstimate exact_return(const TabularMdp& mdp, const PolicyTable& policy, int horizon);

// Smallest T with r_max gamma^T / (1 - gamma) < rel_tol * r_max.
int horizon_for_tail(double gamma, double rel_tol);

struct Segment {
  ForwardKernel dynamics;
  PolicyTable policy;
};

struct BackwardSegment {
  BackwardKernel dynamics;
  PolicyTable policy;  // indexed by the successor state
};

// Three-segment branched process. The anchor state at time k1 is drawn from
// rho0. For t < k1 the backward pair generates (s_t, a_t) from s_{t+1}:
// a_t ~ pi~(. | s_{t+1}), s_t ~ q(. | s_{t+1}, a_t). For k1 <= t < k1 + k2
// the forward pair acts and steps; from t = k1 + k2 on, the pre pair.
struct BranchedProcess {
  Segment pre;
  Segment forward;
  BackwardSegment backward;
  int k1 = 0;
  int k2 = 0;

  void validate(int n_states, int n_actions) const;
};

// Exact marginals of a branched process: state[t] for t in [0, T] and the
// state-action joint[t] for t in [0, T).
struct Marginals {
  std::vector<Vector> state;
  std::vector<Matrix> joint;
};

Marginals branched_marginals(const BranchedProcess& process, const Vector& rho0, int horizon);
ReturnEstimate branched_return(const BranchedProcess& process, const TabularMdp& mdp, int horizon);

// Bayes reversal of the forward pair around a state distribution mu:
// pi~(a | s') and q(s | s', a) of the pair (s, a, s') with s ~ mu,
// a ~ pi(. | s), s' ~ p(. | s, a). Successors with zero mass get uniform rows.
BackwardSegment reverse_segment(const Segment& forward, const Vector& mu);

// Stationary distribution of the chain induced by the policy (power
// iteration from uniform).
Vector stationary_distribution(const ForwardKernel& p, const PolicyTable& pi, int iterations = 10000);

// Random row-stochastic matrix; `sparsity` is the chance of zeroing an
// entry (each row keeps at least one).
Matrix random_stochastic(int rows, int cols, Rng& rng, double sparsity = 0.3);
ForwardKernel random_kernel(int n_states, int n_actions, Rng& rng, double sparsity = 0.3);
TabularMdp random_mdp(int n_states, int n_actions, double gamma, Rng& rng);

// (1 - lambda) a + lambda b, entrywise per action.
ForwardKernel mix(const ForwardKernel& a, const ForwardKernel& b, double lambda);
Matrix mix(const Matrix& a, const Matrix& b, double lambda);

}  // namespace bidyn::bounds
