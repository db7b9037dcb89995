#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <set>

#include "bidyn/common/errors.hpp"
#include "bidyn/common/random.hpp"
#include "bidyn/env/pendulum.hpp"

using namespace bidyn;
using namespace bidyn::env;

TEST(Rng, SameSeedSameStream) {
  Rng a(42), b(42);
  for (int i = 0; i < 10; ++i) EXPECT_EQ(a.normal(), b.normal());
}

TEST(Rng, SubstreamsAreNamedAndIndependentOfParentDraws) {
  Rng a(3);
  const Rng b(3);
  a.normal();
  Rng sa = a.substream("model");
  Rng sb = b.substream("model");
  EXPECT_EQ(sa.uniform(), sb.uniform());
  Rng other = b.substream("policy");
  Rng same_name = b.substream("model", 1);
  EXPECT_NE(b.substream("model").uniform(), other.uniform());
  EXPECT_NE(b.substream("model").uniform(), same_name.uniform());
}

TEST(Rng, NormalMatrixShape) {
  Rng r(1);
  const Matrix m = r.normal_matrix(3, 4);
  EXPECT_EQ(m.rows(), 3);
  EXPECT_EQ(m.cols(), 4);
}

TEST(Pendulum, ResetIsSeededAndWithinInitRange) {
  Pendulum env;
  const Vector o1 = env.reset(7);
  const Vector o2 = env.reset(7);
  EXPECT_EQ(o1, o2);
  std::set<double> seen;
  for (std::uint64_t seed = 0; seed < 500; ++seed) {
    const Vector o = env.reset(seed);
    ASSERT_EQ(o.size(), 3);
    EXPECT_NEAR(o[0] * o[0] + o[1] * o[1], 1.0, 1e-12);
    EXPECT_LE(std::abs(o[2]), PendulumParams::kInitSpeed);
    EXPECT_LE(std::abs(env.state().theta), std::numbers::pi);
    EXPECT_DOUBLE_EQ(o[0], std::cos(env.state().theta));
    EXPECT_DOUBLE_EQ(o[1], std::sin(env.state().theta));
    seen.insert(o[2]);
  }
  EXPECT_GT(seen.size(), 490u);
}

TEST(Pendulum, InitialAngleCoversTheCircle) {
  Pendulum env;
  int negative = 0, large = 0;
  for (std::uint64_t seed = 0; seed < 2000; ++seed) {
    env.reset(seed);
    if (env.state().theta < 0) ++negative;
    if (std::abs(env.state().theta) > 3.0) ++large;
  }
  EXPECT_NEAR(negative / 2000.0, 0.5, 0.05);
  // P(|theta| > 3) = (pi - 3) / pi
  EXPECT_NEAR(large / 2000.0, (std::numbers::pi - 3.0) / std::numbers::pi, 0.02);
}

TEST(Pendulum, RewardExamples) {
  EXPECT_EQ(pendulum_reward({0.0, 0.0}, 0.0), 0.0);
  const double half_pi = std::numbers::pi / 2.0;
  const double expected = -(half_pi * half_pi + 0.1 * 1.0 + 0.001 * 0.25);
  EXPECT_NEAR(pendulum_reward({half_pi, 1.0}, 0.5), expected, 1e-12);
  EXPECT_NEAR(pendulum_reward({half_pi, 1.0}, 0.5), -2.56765, 1e-5);
}

TEST(Pendulum, RewardIsNonPositiveAndZeroOnlyAtRest) {
  Rng rng(5);
  for (int i = 0; i < 1000; ++i) {
    const PendulumState s{rng.uniform(-std::numbers::pi, std::numbers::pi), rng.uniform(-8, 8)};
    const double u = rng.uniform(-2, 2);
    const double r = pendulum_reward(s, u);
    EXPECT_LE(r, 0.0);
    if (s.theta != 0.0 || s.theta_dot != 0.0 || u != 0.0) {
      EXPECT_LT(r, 0.0);
    }
  }
}

TEST(Pendulum, TorqueIsClipped) {
  Pendulum env;
  env.reset(1);
  const PendulumState start{0.4, -0.3};
  PendulumState next_big, next_max;
  const StepResult big = Pendulum::step_from(start, Vector::Constant(1, 3.0), &next_big);
  const StepResult max = Pendulum::step_from(start, Vector::Constant(1, 2.0), &next_max);
  EXPECT_EQ(big.reward, max.reward);
  EXPECT_EQ(big.observation, max.observation);
  EXPECT_EQ(clip_torque(-7.0), -2.0);
}

TEST(Pendulum, DynamicsMatchesHandIntegration) {
  const PendulumState s{0.3, -1.2};
  const double u = 1.5;
  const double thdot = s.theta_dot + (3.0 * 10.0 / 2.0 * std::sin(s.theta) + 3.0 * u) * 0.05;
  const PendulumState next = pendulum_dynamics(s, u);
  EXPECT_NEAR(next.theta_dot, thdot, 1e-12);
  EXPECT_NEAR(next.theta, s.theta + thdot * 0.05, 1e-12);
}

TEST(Pendulum, NonFiniteActionRejected) {
  Pendulum env;
  env.reset(0);
  EXPECT_THROW(env.step(Vector::Constant(1, std::nan(""))), InputError);
  EXPECT_THROW(env.step(Vector::Constant(1, INFINITY)), InputError);
  EXPECT_THROW(env.step(Vector::Zero(2)), InputError);
}

TEST(Pendulum, EpisodeLengthAndNoTermination) {
  Pendulum env;
  EXPECT_EQ(env.spec().steps_per_epoch, 200);
  EXPECT_EQ(env.spec().max_episode_steps, 200);
  EXPECT_FALSE(env.spec().has_termination);
  env.reset(3);
  for (int t = 0; t < 200; ++t) EXPECT_FALSE(env.step(Vector::Constant(1, 2.0)).done);
}

TEST(Pendulum, AngleWrapsAcrossPi) {
  Pendulum env;
  env.reset(0);
  env.set_state({std::numbers::pi - 0.01, 3.0});
  env.step(Vector::Zero(1));
  EXPECT_LT(env.state().theta, -std::numbers::pi + 0.5);
  Rng rng(9);
  for (int i = 0; i < 2000; ++i) {
    env.step(Vector::Constant(1, rng.uniform(-2, 2)));
    EXPECT_LE(std::abs(env.state().theta), std::numbers::pi);
    EXPECT_LE(std::abs(env.state().theta_dot), PendulumParams::kMaxSpeed);
  }
}

TEST(Pendulum, EnergyDriftBoundedWithoutTorque) {
  Rng rng(11);
  for (int i = 0; i < 2000; ++i) {
    const PendulumState s{rng.uniform(-std::numbers::pi, std::numbers::pi), rng.uniform(-3, 3)};
    const PendulumState next = pendulum_dynamics(s, 0.0);
    if (std::abs(next.theta_dot) >= PendulumParams::kMaxSpeed) continue;
    const double drift = std::abs(pendulum_energy(next) - pendulum_energy(s));
    EXPECT_LE(drift, pendulum_energy_drift_bound(next) + 1e-12);
  }
}

TEST(Pendulum, ObservationRoundTrip) {
  const PendulumState s{-2.1, 4.5};
  const PendulumState back = pendulum_state_from_observation(pendulum_observation(s));
  EXPECT_NEAR(back.theta, s.theta, 1e-12);
  EXPECT_EQ(back.theta_dot, s.theta_dot);
}
