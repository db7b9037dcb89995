#include "bidyn/bounds/tabular.hpp"

#include <cmath>
#include <string>

#include "bidyn/common/errors.hpp"

namespace bidyn::bounds {

namespace {

constexpr double kRowTol = 1e-12;
// Propagated marginals accumulate rounding; distributions get more room.
constexpr double kDistTol = 1e-9;

void check_stochastic(const Matrix& m, const std::string& what) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    if ((m.row(i).array() < 0.0).any() || !m.row(i).allFinite())
      throw InputError(what + ": negative or non-finite probability in row " + std::to_string(i));
    if (std::abs(m.row(i).sum() - 1.0) > kRowTol)
      throw InputError(what + ": row " + std::to_string(i) + " does not sum to 1");
  }
}

void check_kernel(const std::vector<Matrix>& k, int n_states, int n_actions, const std::string& what) {
  if (static_cast<int>(k.size()) != n_actions) throw InputError(what + ": wrong action count");
  for (const Matrix& m : k) {
    if (m.rows() != n_states || m.cols() != n_states) throw InputError(what + ": wrong shape");
    check_stochastic(m, what);
  }
}

void check_policy(const Matrix& pi, int n_states, int n_actions, const std::string& what) {
  if (pi.rows() != n_states || pi.cols() != n_actions) throw InputError(what + ": wrong shape");
  check_stochastic(pi, what);
}

void check_distribution(const Vector& p, const std::string& what) {
  if ((p.array() < 0.0).any() || !p.allFinite() || std::abs(p.sum() - 1.0) > kDistTol)
    throw InputError(what + ": not a distribution");
}

Matrix joint_of(const Vector& state, const PolicyTable& pi) {
  return state.asDiagonal() * pi;
}

Vector step_forward(const Matrix& joint, const ForwardKernel& p) {
  Vector next = Vector::Zero(joint.rows());
  for (std::size_t a = 0; a < p.size(); ++a)
    next += p[a].transpose() * joint.col(static_cast<Eigen::Index>(a));
  return next;
}

}  // namespace

double TabularMdp::r_max() const { return reward.cwiseAbs().maxCoeff(); }

void TabularMdp::validate() const {
  if (n_states < 1 || n_actions < 1) throw InputError("TabularMdp: empty state or action set");
  check_kernel(transitions, n_states, n_actions, "TabularMdp transitions");
  if (reward.rows() != n_states || reward.cols() != n_actions || !reward.allFinite())
    throw InputError("TabularMdp: bad reward table");
  if (!(gamma >= 0.0 && gamma < 1.0)) throw InputError("TabularMdp: gamma must be in [0, 1)");
  if (rho0.size() != n_states) throw InputError("TabularMdp: rho0 has the wrong size");
  check_distribution(rho0, "TabularMdp rho0");
}

double tv_distance(const Vector& p, const Vector& q) {
  if (p.size() != q.size()) throw InputError("tv_distance: size mismatch");
  check_distribution(p, "tv_distance p");
  check_distribution(q, "tv_distance q");
  return 0.5 * (p - q).cwiseAbs().sum();
}

int horizon_for_tail(double gamma, double rel_tol) {
  if (!(gamma >= 0.0 && gamma < 1.0)) throw InputError("horizon_for_tail: gamma must be in [0, 1)");
  if (!(rel_tol > 0.0)) throw InputError("horizon_for_tail: tolerance must be positive");
  int t = 1;
  while (std::pow(gamma, t) / (1.0 - gamma) >= rel_tol) ++t;
  return t;
}

ReturnEstimate exact_return(const TabularMdp& mdp, const PolicyTable& policy, int horizon) {
  mdp.validate();
  check_policy(policy, mdp.n_states, mdp.n_actions, "exact_return policy");
  if (horizon < 1) throw InputError("exact_return: horizon must be >= 1");
  ReturnEstimate out;
  Vector state = mdp.rho0;
  double discount = 1.0;
  for (int t = 0; t < horizon; ++t) {
    const Matrix joint = joint_of(state, policy);
    out.value += discount * joint.cwiseProduct(mdp.reward).sum();
    state = step_forward(joint, mdp.transitions);
    discount *= mdp.gamma;
  }
  out.tail = mdp.r_max() * std::pow(mdp.gamma, horizon) / (1.0 - mdp.gamma);
  return out;
}

void BranchedProcess::validate(int n_states, int n_actions) const {
  if (k1 < 0 || k2 < 0) throw InputError("BranchedProcess: rollout lengths must be >= 0");
  check_kernel(pre.dynamics, n_states, n_actions, "pre dynamics");
  check_kernel(forward.dynamics, n_states, n_actions, "forward dynamics");
  check_kernel(backward.dynamics, n_states, n_actions, "backward dynamics");
  check_policy(pre.policy, n_states, n_actions, "pre policy");
  check_policy(forward.policy, n_states, n_actions, "forward policy");
  check_policy(backward.policy, n_states, n_actions, "backward policy");
}

Marginals branched_marginals(const BranchedProcess& process, const Vector& rho0, int horizon) {
  const int n_states = static_cast<int>(rho0.size());
  const int n_actions = static_cast<int>(process.pre.policy.cols());
  process.validate(n_states, n_actions);
  check_distribution(rho0, "branched_marginals rho0");
  if (horizon < 1) throw InputError("branched_marginals: horizon must be >= 1");
  if (process.k1 >= horizon) throw InputError("branched_marginals: horizon shorter than k1");

  Marginals m;
  m.state.assign(static_cast<std::size_t>(horizon) + 1, Vector());
  m.joint.assign(static_cast<std::size_t>(horizon), Matrix());
  const int k1 = process.k1;
  const int big_k = process.k1 + process.k2;
  m.state[k1] = rho0;

  for (int t = k1 - 1; t >= 0; --t) {
    // (s_{t+1}, a_t) joint, then s_t given (s_{t+1}, a_t).
    const Matrix succ = joint_of(m.state[t + 1], process.backward.policy);
    Matrix joint = Matrix::Zero(n_states, n_actions);
    for (int a = 0; a < n_actions; ++a)
      joint.col(a) = process.backward.dynamics[a].transpose() * succ.col(a);
    m.joint[t] = joint;
    m.state[t] = joint.rowwise().sum();
  }
  for (int t = k1; t < horizon; ++t) {
    const Segment& seg = t < big_k ? process.forward : process.pre;
    m.joint[t] = joint_of(m.state[t], seg.policy);
    m.state[t + 1] = step_forward(m.joint[t], seg.dynamics);
  }
  return m;
}

ReturnEstimate branched_return(const BranchedProcess& process, const TabularMdp& mdp, int horizon) {
  mdp.validate();
  const Marginals m = branched_marginals(process, mdp.rho0, horizon);
  ReturnEstimate out;
  double discount = 1.0;
  for (int t = 0; t < horizon; ++t) {
    out.value += discount * m.joint[t].cwiseProduct(mdp.reward).sum();
    discount *= mdp.gamma;
  }
  out.tail = mdp.r_max() * std::pow(mdp.gamma, horizon) / (1.0 - mdp.gamma);
  return out;
}

BackwardSegment reverse_segment(const Segment& forward, const Vector& mu) {
  const auto n_states = mu.size();
  const auto n_actions = static_cast<Eigen::Index>(forward.dynamics.size());
  check_distribution(mu, "reverse_segment mu");
  const Matrix joint = joint_of(mu, forward.policy);
  BackwardSegment out;
  out.policy = Matrix::Zero(n_states, n_actions);
  out.dynamics.assign(static_cast<std::size_t>(n_actions), Matrix::Zero(n_states, n_states));
  for (Eigen::Index a = 0; a < n_actions; ++a) {
    // w(s, s') = mu(s) pi(a | s) p(s' | s, a)
    const Matrix w = joint.col(a).asDiagonal() * forward.dynamics[a];
    out.policy.col(a) = w.colwise().sum().transpose();
    for (Eigen::Index sp = 0; sp < n_states; ++sp) {
      const double z = w.col(sp).sum();
      if (z > 0.0) out.dynamics[a].row(sp) = w.col(sp).transpose() / z;
      else out.dynamics[a].row(sp).setConstant(1.0 / static_cast<double>(n_states));
    }
  }
  for (Eigen::Index sp = 0; sp < n_states; ++sp) {
    const double z = out.policy.row(sp).sum();
    if (z > 0.0) out.policy.row(sp) /= z;
    else out.policy.row(sp).setConstant(1.0 / static_cast<double>(n_actions));
  }
  return out;
}

Vector stationary_distribution(const ForwardKernel& p, const PolicyTable& pi, int iterations) {
  const auto n = pi.rows();
  Vector mu = Vector::Constant(n, 1.0 / static_cast<double>(n));
  for (int i = 0; i < iterations; ++i) {
    // Lazy chain: same stationary law, no periodicity.
    const Vector next = 0.5 * (mu + step_forward(joint_of(mu, pi), p));
    const double change = (next - mu).cwiseAbs().sum();
    mu = next;
    if (change < 1e-15) break;
  }
  return mu / mu.sum();
}

Matrix random_stochastic(int rows, int cols, Rng& rng, double sparsity) {
  Matrix m(rows, cols);
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j)
      m(i, j) = rng.uniform() < sparsity ? 0.0 : -std::log(1.0 - rng.uniform());
    if (m.row(i).sum() <= 0.0) m(i, rng.uniform_int(0, cols - 1)) = 1.0;
    m.row(i) /= m.row(i).sum();
  }
  return m;
}

ForwardKernel random_kernel(int n_states, int n_actions, Rng& rng, double sparsity) {
  ForwardKernel k;
  for (int a = 0; a < n_actions; ++a) k.push_back(random_stochastic(n_states, n_states, rng, sparsity));
  return k;
}

TabularMdp random_mdp(int n_states, int n_actions, double gamma, Rng& rng) {
  TabularMdp mdp;
  mdp.n_states = n_states;
  mdp.n_actions = n_actions;
  mdp.transitions = random_kernel(n_states, n_actions, rng);
  mdp.reward.resize(n_states, n_actions);
  for (int s = 0; s < n_states; ++s)
    for (int a = 0; a < n_actions; ++a) mdp.reward(s, a) = rng.uniform(-1.0, 1.0);
  mdp.gamma = gamma;
  mdp.rho0 = random_stochastic(1, n_states, rng, 0.0).row(0).transpose();
  return mdp;
}

ForwardKernel mix(const ForwardKernel& a, const ForwardKernel& b, double lambda) {
  if (a.size() != b.size()) throw InputError("mix: kernel size mismatch");
  ForwardKernel out;
  for (std::size_t i = 0; i < a.size(); ++i) out.push_back(mix(a[i], b[i], lambda));
  return out;
}

Matrix mix(const Matrix& a, const Matrix& b, double lambda) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw InputError("mix: shape mismatch");
  return (1.0 - lambda) * a + lambda * b;
}

}  // namespace bidyn::bounds
