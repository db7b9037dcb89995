#include "bidyn/bounds/verify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "bidyn/common/errors.hpp"

namespace bidyn::bounds {

namespace {

constexpr double kExactTol = 1e-12;

double row_tv(const Matrix& a, const Matrix& b, Eigen::Index row) {
  return 0.5 * (a.row(row) - b.row(row)).cwiseAbs().sum();
}

// E_{x ~ w} TVD(a(x), b(x)) for policy tables indexed by state.
double expected_policy_tv(const Vector& w, const Matrix& a, const Matrix& b) {
  double e = 0.0;
  for (Eigen::Index s = 0; s < w.size(); ++s) e += w[s] * row_tv(a, b, s);
  return e;
}

// E_{(x, u) ~ joint} TVD(k1[u](x), k2[u](x)).
double expected_kernel_tv(const Matrix& joint, const std::vector<Matrix>& k1,
                          const std::vector<Matrix>& k2) {
  double e = 0.0;
  for (Eigen::Index s = 0; s < joint.rows(); ++s)
    for (Eigen::Index a = 0; a < joint.cols(); ++a)
      e += joint(s, a) * row_tv(k1[static_cast<std::size_t>(a)], k2[static_cast<std::size_t>(a)], s);
  return e;
}

double max_policy_tv(const Matrix& a, const Matrix& b) {
  double m = 0.0;
  for (Eigen::Index s = 0; s < a.rows(); ++s) m = std::max(m, row_tv(a, b, s));
  return m;
}

// Mixes toward a random table with probability 1 - p_same, otherwise copies.
Matrix perturb(const Matrix& m, Rng& rng, double p_same = 0.2) {
  if (rng.uniform() < p_same) return m;
  return mix(m, random_stochastic(static_cast<int>(m.rows()), static_cast<int>(m.cols()), rng),
             rng.uniform());
}

std::vector<Matrix> perturb(const std::vector<Matrix>& k, Rng& rng, double p_same = 0.2) {
  if (rng.uniform() < p_same) return k;
  const double lambda = rng.uniform();
  std::vector<Matrix> out;
  for (const Matrix& m : k)
    out.push_back(mix(m, random_stochastic(static_cast<int>(m.rows()), static_cast<int>(m.cols()), rng), lambda));
  return out;
}

// Measured divergences at or below this are rounding noise.
constexpr double kZeroEps = 1e-12;

bool indistinguishable(const BoundInputs& e) {
  return std::max({e.eps_m_for, e.eps_m_back, e.eps_m_pre, e.eps_pi_for, e.eps_pi_back,
                   e.eps_pi_pre}) <= kZeroEps;
}

// Bounds the return gap beyond the horizon. Processes whose divergences all
// vanish on [0, T) have equal marginals there, and on a finite state set the
// support sequence repeats well within T, so their tails agree as well.
double allowance(const TabularMdp& mdp, int horizon, const BoundInputs& eps) {
  if (indistinguishable(eps)) return 0.0;
  return 2.0 * mdp.r_max() * std::pow(mdp.gamma, horizon) / (1.0 - mdp.gamma);
}

void check_lemma_instance(const VerifyOptions& opt, int horizon, Rng& rng, VerifyReport& report) {
  const int ns = rng.uniform_int(1, opt.max_states);
  const int na = rng.uniform_int(1, opt.max_actions);
  const TabularMdp mdp = random_mdp(ns, na, opt.gamma, rng);
  BranchedProcess p1;
  p1.k1 = rng.uniform_int(0, opt.max_rollout);
  p1.k2 = rng.uniform_int(0, opt.max_rollout);
  p1.pre = {random_kernel(ns, na, rng), random_stochastic(ns, na, rng)};
  p1.forward = {random_kernel(ns, na, rng), random_stochastic(ns, na, rng)};
  p1.backward = {random_kernel(ns, na, rng), random_stochastic(ns, na, rng)};
  BranchedProcess p2 = p1;
  p2.pre = {perturb(p1.pre.dynamics, rng), perturb(p1.pre.policy, rng)};
  p2.forward = {perturb(p1.forward.dynamics, rng), perturb(p1.forward.policy, rng)};
  p2.backward = {perturb(p1.backward.dynamics, rng), perturb(p1.backward.policy, rng)};

  const double eta1 = branched_return(p1, mdp, horizon).value;
  const double eta2 = branched_return(p2, mdp, horizon).value;
  const BoundInputs eps = measure_epsilons(p1, p2, mdp.rho0, horizon, std::max(mdp.r_max(), 1e-12), mdp.gamma);
  const double lhs = std::abs(eta1 - eta2) + allowance(mdp, horizon, eps);
  report.general.record(lhs, bound_rhs(eps, BoundVariant::kGeneral), kExactTol);
}

void check_bidirectional_instance(const VerifyOptions& opt, int horizon, Rng& rng, VerifyReport& report) {
  const int ns = rng.uniform_int(1, opt.max_states);
  const int na = rng.uniform_int(1, opt.max_actions);
  TabularMdp mdp = random_mdp(ns, na, opt.gamma, rng);
  const PolicyTable pi = random_stochastic(ns, na, rng);
  mdp.rho0 = stationary_distribution(mdp.transitions, pi);
  const Segment real{mdp.transitions, pi};
  const BackwardSegment reversed = reverse_segment(real, mdp.rho0);

  BranchedProcess p1;
  p1.k1 = rng.uniform_int(0, opt.max_rollout);
  p1.k2 = rng.uniform_int(0, opt.max_rollout);
  p1.pre = real;
  p1.forward = real;
  p1.backward = reversed;

  const double eta_true = exact_return(mdp, pi, horizon).value;
  const double eta1 = branched_return(p1, mdp, horizon).value;
  report.reversal_consistency = std::max(report.reversal_consistency, std::abs(eta_true - eta1));

  // Learned models are mixtures toward noise; TVD is linear in the mixing
  // weight, so both model errors can be set to the same value exactly.
  const ForwardKernel noise_for = random_kernel(ns, na, rng);
  const BackwardKernel noise_back = random_kernel(ns, na, rng);
  BranchedProcess unit = p1;
  unit.forward.dynamics = noise_for;
  unit.backward.dynamics = noise_back;
  const BoundInputs unit_eps = measure_epsilons(p1, unit, mdp.rho0, horizon, 1.0, mdp.gamma);
  const double eps_m = std::min(p1.k2 > 0 ? unit_eps.eps_m_for : 1.0,
                                p1.k1 > 0 ? unit_eps.eps_m_back : 1.0) *
                       rng.uniform(0.05, 1.0);

  BranchedProcess p2 = p1;
  p2.pre.policy = mix(pi, random_stochastic(ns, na, rng), rng.uniform(0.05, 1.0));
  if (p1.k2 > 0 && unit_eps.eps_m_for > 0.0)
    p2.forward.dynamics = mix(real.dynamics, noise_for, eps_m / unit_eps.eps_m_for);
  if (p1.k1 > 0 && unit_eps.eps_m_back > 0.0)
    p2.backward.dynamics = mix(reversed.dynamics, noise_back, eps_m / unit_eps.eps_m_back);

  const double eta2 = branched_return(p2, mdp, horizon).value;
  BoundInputs eps = measure_epsilons(p1, p2, mdp.rho0, horizon, std::max(mdp.r_max(), 1e-12), mdp.gamma);
  // Exactly one shared model error, as the bidirectional bound assumes.
  const double shared = std::max(eps.eps_m_for, eps.eps_m_back);
  eps.eps_m_for = eps.eps_m_back = shared;
  const double lhs =
      std::abs(eta_true - eta2) + allowance(mdp, horizon, eps) + std::abs(eta_true - eta1);
  report.bidirectional.record(lhs, bound_rhs(eps, BoundVariant::kBidirectional), kExactTol);
  report.mbpo.record(lhs, bound_rhs(eps, BoundVariant::kMbpo), kExactTol);
}

void check_joint_tvd(const VerifyOptions& opt, Rng& rng, VerifyReport& report) {
  const int nx = rng.uniform_int(1, opt.max_states);
  const int ny = rng.uniform_int(1, opt.max_states);
  const Vector px1 = random_stochastic(1, nx, rng).row(0).transpose();
  const Vector px2 = perturb(Matrix(px1.transpose()), rng).row(0).transpose();
  const Matrix py1 = random_stochastic(nx, ny, rng);
  const Matrix py2 = perturb(py1, rng);
  const Matrix j1 = px1.asDiagonal() * py1;
  const Matrix j2 = px2.asDiagonal() * py2;
  const double lhs = 0.5 * (j1 - j2).cwiseAbs().sum();
  const double rhs = 0.5 * (px1 - px2).cwiseAbs().sum() + max_policy_tv(py1, py2);
  report.joint_tvd.record(lhs, rhs, kExactTol);
}

void check_backward_chain(const VerifyOptions& opt, Rng& rng, VerifyReport& report) {
  const int ns = rng.uniform_int(1, opt.max_states);
  const int na = rng.uniform_int(1, opt.max_actions);
  const int length = rng.uniform_int(1, 6);
  const Matrix pi1 = random_stochastic(ns, na, rng);
  const Matrix pi2 = perturb(pi1, rng);
  const BackwardKernel q1 = random_kernel(ns, na, rng);
  const BackwardKernel q2 = perturb(q1, rng);
  Vector p1 = random_stochastic(1, ns, rng).row(0).transpose();
  Vector p2 = perturb(Matrix(p1.transpose()), rng).row(0).transpose();
  const double eps_pi = max_policy_tv(pi1, pi2);
  for (int step = 0; step < length; ++step) {
    const Matrix succ1 = p1.asDiagonal() * pi1;
    const Matrix succ2 = p2.asDiagonal() * pi2;
    const double eps_m = expected_kernel_tv(succ1, q1, q2);
    Vector prev1 = Vector::Zero(ns), prev2 = Vector::Zero(ns);
    for (int a = 0; a < na; ++a) {
      prev1 += q1[a].transpose() * succ1.col(a);
      prev2 += q2[a].transpose() * succ2.col(a);
    }
    const double rhs = eps_m + eps_pi + 0.5 * (p1 - p2).cwiseAbs().sum();
    report.backward_marginal.record(0.5 * (prev1 - prev2).cwiseAbs().sum(), rhs, kExactTol);
    p1 = prev1;
    p2 = prev2;
  }
}

void tightness_sweep(VerifyReport& report) {
  const double grid_eps[] = {0.0, 0.05, 0.1};
  for (double gamma : {0.5, 0.9, 0.99})
    for (int k1 = 0; k1 <= 5; ++k1)
      for (int k2 = 0; k2 <= 5; ++k2)
        for (double em : grid_eps)
          for (double ep : grid_eps) {
            BoundInputs in;
            in.gamma = gamma;
            in.k1 = k1;
            in.k2 = k2;
            in.eps_m_for = in.eps_m_back = em;
            in.eps_pi_pre = ep;
            report.tightness.record(bound_rhs(in, BoundVariant::kBidirectional),
                                    bound_rhs(in, BoundVariant::kMbpo), kExactTol);
          }
}

}  // namespace

BoundInputs measure_epsilons(const BranchedProcess& p1, const BranchedProcess& p2,
                             const Vector& rho0, int horizon, double r_max, double gamma) {
  if (p1.k1 != p2.k1 || p1.k2 != p2.k2)
    throw InputError("measure_epsilons: processes differ in rollout lengths");
  const Marginals m = branched_marginals(p1, rho0, horizon);
  BoundInputs out;
  out.r_max = r_max;
  out.gamma = gamma;
  out.k1 = p1.k1;
  out.k2 = p1.k2;
  const int big_k = p1.k1 + p1.k2;
  for (int t = 0; t < horizon; ++t) {
    if (t < p1.k1) {
      const Matrix succ = m.state[t + 1].asDiagonal() * p1.backward.policy;
      out.eps_m_back = std::max(out.eps_m_back, expected_kernel_tv(succ, p1.backward.dynamics, p2.backward.dynamics));
      out.eps_pi_back = std::max(out.eps_pi_back, expected_policy_tv(m.state[t + 1], p1.backward.policy, p2.backward.policy));
    } else if (t < big_k) {
      out.eps_m_for = std::max(out.eps_m_for, expected_kernel_tv(m.joint[t], p1.forward.dynamics, p2.forward.dynamics));
      out.eps_pi_for = std::max(out.eps_pi_for, expected_policy_tv(m.state[t], p1.forward.policy, p2.forward.policy));
    } else {
      out.eps_m_pre = std::max(out.eps_m_pre, expected_kernel_tv(m.joint[t], p1.pre.dynamics, p2.pre.dynamics));
      out.eps_pi_pre = std::max(out.eps_pi_pre, expected_policy_tv(m.state[t], p1.pre.policy, p2.pre.policy));
    }
  }
  return out;
}

void CheckStats::record(double lhs, double rhs, double tolerance) {
  const double slack = rhs - lhs;
  worst_slack = checked == 0 ? slack : std::min(worst_slack, slack);
  if (rhs > 1e-9) max_ratio = std::max(max_ratio, lhs / rhs);
  ++checked;
  if (!(lhs <= rhs + tolerance)) ++violations;
}

void VerifyOptions::validate() const {
  if (n_instances < 1) throw InputError("verify: n_instances must be >= 1");
  if (max_states < 1 || max_actions < 1) throw InputError("verify: state/action caps must be >= 1");
  if (!(gamma > 0.0 && gamma < 1.0)) throw InputError("verify: gamma must be in (0, 1)");
  if (!(tail_rel_tol > 0.0)) throw InputError("verify: tail tolerance must be positive");
  if (max_rollout < 0) throw InputError("verify: max_rollout must be >= 0");
}

std::vector<const CheckStats*> VerifyReport::checks() const {
  return {&general, &bidirectional, &mbpo, &joint_tvd, &backward_marginal, &tightness};
}

int VerifyReport::total_violations() const {
  int v = 0;
  for (const CheckStats* c : checks()) v += c->violations;
  return v;
}

VerifyReport verify_suite(const VerifyOptions& options, std::uint64_t seed) {
  options.validate();
  VerifyReport report;
  report.options = options;
  report.seed = seed;
  report.horizon = std::max(horizon_for_tail(options.gamma, options.tail_rel_tol),
                            2 * options.max_rollout + 1);
  const Rng root(seed);
  for (int i = 0; i < options.n_instances; ++i) {
    Rng lemma_rng = root.substream("general", static_cast<std::uint64_t>(i));
    Rng bidirectional_rng = root.substream("bidirectional", static_cast<std::uint64_t>(i));
    Rng joint_rng = root.substream("joint_tvd", static_cast<std::uint64_t>(i));
    Rng chain_rng = root.substream("backward_chain", static_cast<std::uint64_t>(i));
    check_lemma_instance(options, report.horizon, lemma_rng, report);
    check_bidirectional_instance(options, report.horizon, bidirectional_rng, report);
    check_joint_tvd(options, joint_rng, report);
    check_backward_chain(options, chain_rng, report);
  }
  tightness_sweep(report);
  return report;
}

}  // namespace bidyn::bounds
