#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "bidyn/bounds/bound_rhs.hpp"
#include "bidyn/bounds/tabular.hpp"
#include "bidyn/bounds/verify.hpp"
#include "bidyn/common/errors.hpp"
#include "bidyn/common/random.hpp"

using namespace bidyn;
using namespace bidyn::bounds;

namespace {

int draw(const Eigen::RowVectorXd& row, Rng& rng) {
  std::discrete_distribution<int> d(row.data(), row.data() + row.size());
  return d(rng.engine());
}

int draw(const Vector& p, Rng& rng) { return draw(Eigen::RowVectorXd(p.transpose()), rng); }

struct McResult {
  double mean = 0.0;
  double se = 0.0;
};

template <typename Episode>
McResult monte_carlo(int episodes, Rng& rng, Episode episode) {
  double sum = 0.0, sq = 0.0;
  for (int i = 0; i < episodes; ++i) {
    const double g = episode(rng);
    sum += g;
    sq += g * g;
  }
  const double mean = sum / episodes;
  const double var = (sq - episodes * mean * mean) / (episodes - 1);
  return {mean, std::sqrt(var / episodes)};
}

// Naive simulator of the segmented process, independent of the exact
// marginal propagation.
double simulate_branched(const BranchedProcess& p, const TabularMdp& mdp, int horizon, Rng& rng) {
  std::vector<int> s(static_cast<std::size_t>(horizon) + 1), a(static_cast<std::size_t>(horizon));
  const int k1 = p.k1, big_k = p.k1 + p.k2;
  s[k1] = draw(Vector(mdp.rho0), rng);
  for (int t = k1 - 1; t >= 0; --t) {
    a[t] = draw(Eigen::RowVectorXd(p.backward.policy.row(s[t + 1])), rng);
    s[t] = draw(Eigen::RowVectorXd(p.backward.dynamics[a[t]].row(s[t + 1])), rng);
  }
  for (int t = k1; t < horizon; ++t) {
    const Segment& seg = t < big_k ? p.forward : p.pre;
    a[t] = draw(Eigen::RowVectorXd(seg.policy.row(s[t])), rng);
    s[t + 1] = draw(Eigen::RowVectorXd(seg.dynamics[a[t]].row(s[t])), rng);
  }
  double g = 0.0, discount = 1.0;
  for (int t = 0; t < horizon; ++t) {
    g += discount * mdp.reward(s[t], a[t]);
    discount *= mdp.gamma;
  }
  return g;
}

BranchedProcess random_process(const TabularMdp& mdp, int k1, int k2, Rng& rng) {
  BranchedProcess p;
  p.pre = {mdp.transitions, random_stochastic(mdp.n_states, mdp.n_actions, rng)};
  p.forward = {random_kernel(mdp.n_states, mdp.n_actions, rng),
               random_stochastic(mdp.n_states, mdp.n_actions, rng)};
  p.backward = {random_kernel(mdp.n_states, mdp.n_actions, rng),
                random_stochastic(mdp.n_states, mdp.n_actions, rng)};
  p.k1 = k1;
  p.k2 = k2;
  return p;
}

BoundInputs spot_inputs() {
  BoundInputs in;
  in.eps_pi_pre = 0.1;
  in.eps_m_for = 0.05;
  in.eps_m_back = 0.05;
  in.r_max = 1.0;
  in.gamma = 0.9;
  in.k1 = 1;
  in.k2 = 1;
  return in;
}

}  // namespace

TEST(TvDistance, HandValues) {
  const Vector p{{0.5, 0.5}}, q{{1.0, 0.0}};
  EXPECT_EQ(tv_distance(p, p), 0.0);
  EXPECT_DOUBLE_EQ(tv_distance(p, q), 0.5);
  EXPECT_DOUBLE_EQ(tv_distance(Vector{{1.0, 0.0}}, Vector{{0.0, 1.0}}), 1.0);
  EXPECT_THROW(tv_distance(Vector{{0.5, 0.6}}, q), InputError);
  EXPECT_THROW(tv_distance(Vector{{1.0}}, q), InputError);
}

TEST(ExactReturn, GeometricSeries) {
  TabularMdp mdp;
  mdp.n_states = 1;
  mdp.n_actions = 1;
  mdp.transitions = {Matrix::Ones(1, 1)};
  mdp.reward = Matrix::Ones(1, 1);
  mdp.gamma = 0.9;
  mdp.rho0 = Vector::Ones(1);
  const int horizon = horizon_for_tail(0.9, 1e-6);
  const ReturnEstimate r = exact_return(mdp, Matrix::Ones(1, 1), horizon);
  EXPECT_NEAR(r.value, 10.0, r.tail + 1e-12);
  EXPECT_LT(r.tail, 1e-6);
  EXPECT_NEAR(r.tail, std::pow(0.9, horizon) / 0.1, 1e-18);
  EXPECT_GE(std::pow(0.9, horizon - 1) / 0.1, 1e-6);  // smallest such horizon
}

TEST(ExactReturn, ZeroRewardIsZero) {
  Rng rng(1);
  TabularMdp mdp = random_mdp(4, 2, 0.9, rng);
  mdp.reward.setZero();
  EXPECT_EQ(exact_return(mdp, random_stochastic(4, 2, rng), 50).value, 0.0);
}

TEST(ExactReturn, TruncationWithinTail) {
  Rng rng(2);
  const TabularMdp mdp = random_mdp(5, 3, 0.9, rng);
  const Matrix pi = random_stochastic(5, 3, rng);
  const ReturnEstimate short_run = exact_return(mdp, pi, 60);
  const ReturnEstimate long_run = exact_return(mdp, pi, 120);
  EXPECT_LE(std::abs(long_run.value - short_run.value), short_run.tail);
}

TEST(ExactReturn, MatchesMonteCarlo) {
  Rng rng(3);
  const TabularMdp mdp = random_mdp(4, 2, 0.9, rng);
  const Matrix pi = random_stochastic(4, 2, rng);
  const int horizon = 150;
  const double exact = exact_return(mdp, pi, horizon).value;
  const McResult mc = monte_carlo(100000, rng, [&](Rng& r) {
    int s = draw(Vector(mdp.rho0), r);
    double g = 0.0, discount = 1.0;
    for (int t = 0; t < horizon; ++t) {
      const int a = draw(Eigen::RowVectorXd(pi.row(s)), r);
      g += discount * mdp.reward(s, a);
      discount *= mdp.gamma;
      s = draw(Eigen::RowVectorXd(mdp.transitions[a].row(s)), r);
    }
    return g;
  });
  EXPECT_LE(std::abs(exact - mc.mean), 3.0 * mc.se);
}

TEST(ExactReturn, InvalidInputsRejected) {
  Rng rng(4);
  TabularMdp mdp = random_mdp(3, 2, 0.9, rng);
  Matrix bad = random_stochastic(3, 2, rng);
  bad(0, 0) += 0.1;
  EXPECT_THROW(exact_return(mdp, bad, 10), InputError);
  mdp.transitions[1](2, 0) = -0.5;
  EXPECT_THROW(mdp.validate(), InputError);
  TabularMdp g = random_mdp(3, 2, 0.9, rng);
  g.gamma = 1.0;
  EXPECT_THROW(g.validate(), InputError);
}

TEST(Branched, NoBranchEqualsPrePair) {
  Rng rng(5);
  const TabularMdp mdp = random_mdp(5, 3, 0.9, rng);
  const BranchedProcess p = random_process(mdp, 0, 0, rng);
  EXPECT_NEAR(branched_return(p, mdp, 100).value, exact_return(mdp, p.pre.policy, 100).value, 1e-12);
}

TEST(Branched, ConsistentSegmentsEqualExactReturn) {
  Rng rng(6);
  TabularMdp mdp = random_mdp(5, 3, 0.9, rng);
  const Matrix pi = random_stochastic(5, 3, rng);
  // From the stationary distribution the reversed pair regenerates the same
  // marginals backward in time.
  mdp.rho0 = stationary_distribution(mdp.transitions, pi);
  const Segment seg{mdp.transitions, pi};
  for (int k1 : {0, 1, 3}) {
    for (int k2 : {0, 2, 4}) {
      BranchedProcess p{seg, seg, reverse_segment(seg, mdp.rho0), k1, k2};
      EXPECT_NEAR(branched_return(p, mdp, 150).value, exact_return(mdp, pi, 150).value, 1e-10)
          << k1 << " " << k2;
    }
  }
}

TEST(Branched, MarginalsAreDistributions) {
  Rng rng(7);
  const TabularMdp mdp = random_mdp(4, 3, 0.9, rng);
  const BranchedProcess p = random_process(mdp, 2, 3, rng);
  const Marginals m = branched_marginals(p, mdp.rho0, 20);
  ASSERT_EQ(m.state.size(), 21u);
  ASSERT_EQ(m.joint.size(), 20u);
  EXPECT_LT((m.state[2] - mdp.rho0).cwiseAbs().maxCoeff(), 1e-15);
  for (int t = 0; t < 20; ++t) {
    EXPECT_NEAR(m.joint[t].sum(), 1.0, 1e-12);
    EXPECT_GE(m.joint[t].minCoeff(), 0.0);
    EXPECT_LT((m.joint[t].rowwise().sum() - m.state[t]).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Branched, MatchesMonteCarlo) {
  Rng rng(8);
  const TabularMdp mdp = random_mdp(4, 2, 0.9, rng);
  const BranchedProcess p = random_process(mdp, 2, 3, rng);
  const int horizon = 150;
  const double exact = branched_return(p, mdp, horizon).value;
  const McResult mc = monte_carlo(100000, rng, [&](Rng& r) { return simulate_branched(p, mdp, horizon, r); });
  EXPECT_LE(std::abs(exact - mc.mean), 3.0 * mc.se);
}

TEST(Reversal, ReproducesJointOfForwardPair) {
  Rng rng(9);
  const TabularMdp mdp = random_mdp(5, 3, 0.9, rng);
  const Segment seg{mdp.transitions, random_stochastic(5, 3, rng)};
  const Vector mu = mdp.rho0;
  const BackwardSegment back = reverse_segment(seg, mu);
  // P(s, a, s') computed both ways.
  Vector next = Vector::Zero(5);
  for (int a = 0; a < 3; ++a) next += (mu.cwiseProduct(seg.policy.col(a)).transpose() * seg.dynamics[a]).transpose();
  for (int s = 0; s < 5; ++s)
    for (int a = 0; a < 3; ++a)
      for (int sp = 0; sp < 5; ++sp) {
        const double fwd = mu[s] * seg.policy(s, a) * seg.dynamics[a](s, sp);
        const double bwd = next[sp] * back.policy(sp, a) * back.dynamics[a](sp, s);
        EXPECT_NEAR(fwd, bwd, 1e-15);
      }
  for (int sp = 0; sp < 5; ++sp) EXPECT_NEAR(back.policy.row(sp).sum(), 1.0, 1e-12);
}

TEST(BoundRhs, SpotValues) {
  const BoundInputs in = spot_inputs();
  EXPECT_NEAR(bound_rhs(in, BoundVariant::kBidirectional), 17.2, 1e-12);
  EXPECT_NEAR(bound_rhs(in, BoundVariant::kMbpo), 18.2, 1e-12);
}

TEST(BoundRhs, ZeroDivergencesGiveZero) {
  BoundInputs in;
  in.k1 = 3;
  in.k2 = 2;
  for (BoundVariant v : {BoundVariant::kGeneral, BoundVariant::kBidirectional, BoundVariant::kMbpo})
    EXPECT_EQ(bound_rhs(in, v), 0.0);
}

TEST(BoundRhs, GeneralMatchesHandEvaluation) {
  BoundInputs in;
  in.eps_m_for = 0.01;
  in.eps_m_back = 0.02;
  in.eps_m_pre = 0.03;
  in.eps_pi_for = 0.04;
  in.eps_pi_back = 0.05;
  in.eps_pi_pre = 0.06;
  in.r_max = 2.0;
  in.gamma = 0.8;
  in.k1 = 2;
  in.k2 = 3;
  const double g = 0.8, big_k = 5;
  const double expected =
      2.0 * 2.0 *
      (std::pow(g, big_k + 1) / ((1 - g) * (1 - g)) * (0.03 + 0.06) + std::pow(g, big_k) / (1 - g) * 0.06 +
       (1 - g * g) / (1 - g) * (2 * (0.02 + 0.05) + 0.05) + g * g / (1 - g) * (3 * (0.01 + 0.04) + 0.04));
  EXPECT_NEAR(bound_rhs(in, BoundVariant::kGeneral), expected, 1e-12);
}

TEST(BoundRhs, BidirectionalNeverExceedsMbpoOnGrid) {
  for (int k1 = 0; k1 <= 5; ++k1)
    for (int k2 = 0; k2 <= 5; ++k2)
      for (double g : {0.5, 0.9, 0.99})
        for (double em : {0.0, 0.05, 0.1})
          for (double ep : {0.0, 0.05, 0.1}) {
            BoundInputs in;
            in.k1 = k1;
            in.k2 = k2;
            in.gamma = g;
            in.eps_m_for = in.eps_m_back = em;
            in.eps_pi_pre = ep;
            EXPECT_LE(bound_rhs(in, BoundVariant::kBidirectional), bound_rhs(in, BoundVariant::kMbpo) + 1e-12);
          }
}

TEST(BoundRhs, MonotoneInEveryInput) {
  Rng rng(10);
  for (int trial = 0; trial < 200; ++trial) {
    BoundInputs in;
    in.eps_m_for = rng.uniform(0, 0.5);
    in.eps_m_back = rng.uniform(0, 0.5);
    in.eps_m_pre = rng.uniform(0, 0.5);
    in.eps_pi_for = rng.uniform(0, 0.5);
    in.eps_pi_back = rng.uniform(0, 0.5);
    in.eps_pi_pre = rng.uniform(0, 0.5);
    in.r_max = rng.uniform(0.1, 3);
    in.gamma = rng.uniform(0.1, 0.99);
    in.k1 = rng.uniform_int(0, 5);
    in.k2 = rng.uniform_int(0, 5);
    double* fields[] = {&in.eps_m_for, &in.eps_m_back, &in.eps_m_pre, &in.eps_pi_for,
                        &in.eps_pi_back, &in.eps_pi_pre, &in.r_max};
    for (BoundVariant v : {BoundVariant::kGeneral, BoundVariant::kBidirectional, BoundVariant::kMbpo}) {
      const double base = bound_rhs(in, v);
      for (double* f : fields) {
        const double saved = *f;
        *f += 0.01;
        EXPECT_GE(bound_rhs(in, v), base - 1e-12);
        *f = saved;
      }
    }
  }
}

TEST(BoundRhs, InvalidInputsRejected) {
  BoundInputs in = spot_inputs();
  in.eps_m_for = -0.1;
  EXPECT_THROW(bound_rhs(in, BoundVariant::kGeneral), InputError);
  in = spot_inputs();
  in.gamma = 1.0;
  EXPECT_THROW(bound_rhs(in, BoundVariant::kGeneral), InputError);
}

TEST(Epsilons, IdenticalProcessesHaveZeroDivergence) {
  Rng rng(11);
  const TabularMdp mdp = random_mdp(5, 3, 0.9, rng);
  const BranchedProcess p = random_process(mdp, 2, 3, rng);
  const BoundInputs eps = measure_epsilons(p, p, mdp.rho0, 100, mdp.r_max(), mdp.gamma);
  EXPECT_EQ(eps.eps_m_for, 0.0);
  EXPECT_EQ(eps.eps_m_back, 0.0);
  EXPECT_EQ(eps.eps_m_pre, 0.0);
  EXPECT_EQ(eps.eps_pi_for, 0.0);
  EXPECT_EQ(eps.eps_pi_back, 0.0);
  EXPECT_EQ(eps.eps_pi_pre, 0.0);
  EXPECT_EQ(branched_return(p, mdp, 100).value, branched_return(p, mdp, 100).value);
}

TEST(Epsilons, PerturbedProcessSatisfiesGeneralBound) {
  Rng rng(12);
  for (int trial = 0; trial < 20; ++trial) {
    const TabularMdp mdp = random_mdp(4, 2, 0.9, rng);
    const BranchedProcess p1 = random_process(mdp, 2, 2, rng);
    BranchedProcess p2 = p1;
    p2.forward.dynamics = mix(p1.forward.dynamics, random_kernel(4, 2, rng), 0.3);
    p2.backward.policy = mix(p1.backward.policy, random_stochastic(4, 2, rng), 0.3);
    const int horizon = 150;
    const BoundInputs eps = measure_epsilons(p1, p2, mdp.rho0, horizon, mdp.r_max(), mdp.gamma);
    EXPECT_EQ(eps.eps_m_pre, 0.0);
    EXPECT_GT(eps.eps_m_for, 0.0);
    EXPECT_GT(eps.eps_pi_back, 0.0);
    const double gap =
        std::abs(branched_return(p1, mdp, horizon).value - branched_return(p2, mdp, horizon).value);
    const double allowance = 2.0 * mdp.r_max() * std::pow(0.9, horizon) / 0.1;
    EXPECT_LE(gap, bound_rhs(eps, BoundVariant::kGeneral) + allowance);
  }
}

TEST(VerifySuite, NoViolations) {
  const VerifyReport report = verify_suite(VerifyOptions{}, 2024);
  EXPECT_EQ(report.total_violations(), 0);
  EXPECT_EQ(report.horizon, 153);
  for (const CheckStats* c : report.checks()) {
    EXPECT_GT(c->checked, 0) << c->name;
    EXPECT_EQ(c->violations, 0) << c->name;
  }
  EXPECT_EQ(report.general.checked, 100);
  EXPECT_LT(report.reversal_consistency, 1e-10);
}

TEST(VerifySuite, DeterministicForSeed) {
  VerifyOptions o;
  o.n_instances = 20;
  const VerifyReport a = verify_suite(o, 5), b = verify_suite(o, 5);
  EXPECT_EQ(a.general.worst_slack, b.general.worst_slack);
  EXPECT_EQ(a.bidirectional.max_ratio, b.bidirectional.max_ratio);
}

TEST(CheckStats, RecordsViolationsBeyondTolerance) {
  CheckStats c{"x"};
  c.record(1.0, 2.0, 1e-12);
  c.record(2.0 + 1e-13, 2.0, 1e-12);
  EXPECT_EQ(c.violations, 0);
  c.record(2.1, 2.0, 1e-12);
  EXPECT_EQ(c.violations, 1);
  EXPECT_EQ(c.checked, 3);
  EXPECT_NEAR(c.worst_slack, -0.1, 1e-12);
  EXPECT_NEAR(c.max_ratio, 1.05, 1e-12);
}
