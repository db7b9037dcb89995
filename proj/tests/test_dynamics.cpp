#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "bidyn/common/errors.hpp"
#include "bidyn/common/random.hpp"
#include "bidyn/dynamics/ensemble.hpp"
#include "bidyn/dynamics/exact_models.hpp"
#include "bidyn/dynamics/normalizer.hpp"
#include "bidyn/env/pendulum.hpp"
#include "support/finite_difference.hpp"
#include "support/linear_model.hpp"

using namespace bidyn;
using namespace bidyn::dynamics;
using bidyn::testing::LinearModel;
using bidyn::testing::max_gradient_error;

namespace {

LinearModel make_linear(Direction dir) {
  Matrix a(3, 3), b(3, 1);
  a << 0.9, 0.1, 0.0,
       -0.2, 0.8, 0.1,
       0.0, 0.3, 0.7;
  b << 0.5, -0.3, 1.0;
  Vector c(3), d(1);
  c << 1.0, -0.5, 0.25;
  d << -0.1;
  return LinearModel(dir, a, b, c, d);
}

std::vector<Transition> linear_data(const LinearModel& sys, int n, Rng& rng) {
  std::vector<Transition> out;
  out.reserve(n);
  for (int i = 0; i < n; ++i) {
    Transition t;
    t.s = Vector::NullaryExpr(3, [&] { return rng.uniform(-1, 1); });
    t.a = Vector::Constant(1, rng.uniform(-1, 1));
    const ModelStep step = sys.mean(Matrix(t.s), Matrix(t.a));
    t.s_next = step.states.col(0);
    t.r = step.rewards[0];
    out.push_back(t);
  }
  return out;
}

TrainOptions epochs(int n) {
  TrainOptions o;
  o.max_epochs = n;
  return o;
}

EnsembleConfig small_config() {
  EnsembleConfig c;
  c.ensemble_size = 2;
  c.elite_count = 2;
  c.hidden_sizes = {32, 32};
  c.batch_size = 64;
  c.patience = 20;
  c.improvement_threshold = 1e-3;
  return c;
}

// Trained once and shared across tests; training dominates the run time.
struct LinearFixture {
  LinearModel sys = make_linear(Direction::kForward);
  std::vector<Transition> train, test;
  ProbabilisticEnsemble forward, backward;

  static LinearFixture& get() {
    static LinearFixture f;
    return f;
  }

 private:
  LinearFixture()
      : forward(make(Direction::kForward)), backward(make(Direction::kBackward)) {
    Rng rng(21);
    train = linear_data(sys, 5000, rng);
    test = linear_data(sys, 500, rng);
    Rng train_rng(22);
    forward.train(train, epochs(150), train_rng);
    backward.train(train, epochs(150), train_rng);
  }
  static ProbabilisticEnsemble make(Direction dir) {
    Rng rng(dir == Direction::kForward ? 1 : 2);
    return ProbabilisticEnsemble(dir, 3, 1, small_config(), rng);
  }
};

Matrix stack_states(const std::vector<Transition>& data, bool next) {
  Matrix m(3, static_cast<Eigen::Index>(data.size()));
  for (std::size_t j = 0; j < data.size(); ++j) m.col(j) = next ? data[j].s_next : data[j].s;
  return m;
}

Matrix stack_actions(const std::vector<Transition>& data) {
  Matrix m(1, static_cast<Eigen::Index>(data.size()));
  for (std::size_t j = 0; j < data.size(); ++j) m.col(j) = data[j].a;
  return m;
}

}  // namespace

TEST(Ensemble, ForwardLearnsLinearSystem) {
  auto& f = LinearFixture::get();
  const Matrix s = stack_states(f.test, false), s2 = stack_states(f.test, true);
  const Matrix a = stack_actions(f.test);
  const ModelStep pred = f.forward.mean(s, a);
  const double mse = (pred.states - s2).squaredNorm() / static_cast<double>(s.cols() * 3);
  EXPECT_LT(mse, 1e-3);
  // Relative error of the mean prediction against the exact map.
  EXPECT_LT((pred.states - s2).norm() / s2.norm(), 0.01);
  const ModelStep exact = f.sys.mean(s, a);
  EXPECT_LT((pred.rewards - exact.rewards).squaredNorm() / static_cast<double>(s.cols()), 1e-3);
}

TEST(Ensemble, BackwardLearnsInverseMap) {
  auto& f = LinearFixture::get();
  const Matrix s = stack_states(f.test, false), s2 = stack_states(f.test, true);
  const Matrix a = stack_actions(f.test);
  const ModelStep pred = f.backward.mean(s2, a);
  const double mse = (pred.states - s).squaredNorm() / static_cast<double>(s.cols() * 3);
  EXPECT_LT(mse, 1e-3);
  EXPECT_LT((pred.states - s).norm() / s.norm(), 0.01);
}

TEST(Ensemble, ForwardThenBackwardReturnsStart) {
  auto& f = LinearFixture::get();
  Rng rng(23);
  double worst = 0.0;
  for (int i = 0; i < 50; ++i) {
    const Transition& t = f.test[i];
    const Prediction fwd = f.forward.predict(t.s, t.a, std::nullopt, rng);
    const Prediction back = f.backward.predict(fwd.state, t.a, std::nullopt, rng);
    worst = std::max(worst, (back.state - t.s).norm());
  }
  // Both legs add learned noise; it is small on a deterministic system.
  EXPECT_LT(worst, 0.2);
}

TEST(Ensemble, TrainedBeatsUntrainedOnHoldout) {
  auto& f = LinearFixture::get();
  const std::vector<double> trained = f.forward.validation_loss(f.test);
  ProbabilisticEnsemble fresh = f.forward;
  Rng rng(24);
  fresh.reinitialize_member(0, rng);
  const std::vector<double> untrained = fresh.validation_loss(f.test);
  EXPECT_LT(trained[0], untrained[0]);
  EXPECT_EQ(trained[1], untrained[1]);
}

TEST(Ensemble, ValidationLossIsAdditiveAcrossHeads) {
  auto& f = LinearFixture::get();
  const auto both = f.forward.validation_loss(f.test, HeadMask{true, true});
  const auto state = f.forward.validation_loss(f.test, HeadMask{true, false});
  const auto reward = f.forward.validation_loss(f.test, HeadMask{false, true});
  for (std::size_t k = 0; k < both.size(); ++k)
    EXPECT_NEAR(both[k], state[k] + reward[k], 1e-10 * std::max(1.0, std::abs(both[k])));
}

TEST(Ensemble, FixedMemberNearFloorVarianceIsNearMean) {
  auto& f = LinearFixture::get();
  Rng rng(25);
  const Transition& t = f.test[0];
  const Prediction a = f.forward.predict(t.s, t.a, 0, rng);
  const Prediction b = f.forward.predict(t.s, t.a, 0, rng);
  EXPECT_LT((a.state - b.state).norm(), 0.1);
}

TEST(Ensemble, ErrorsAreTyped) {
  Rng rng(26);
  ProbabilisticEnsemble ens(Direction::kForward, 3, 1, small_config(), rng);
  EXPECT_FALSE(ens.ready());
  EXPECT_THROW(ens.train({}, TrainOptions{}, rng), PreconditionError);
  EXPECT_THROW(ens.predict(Vector::Zero(3), Vector::Zero(1), std::nullopt, rng), StateError);
  EXPECT_THROW(ens.mean(Matrix::Zero(3, 1), Matrix::Zero(1, 1)), StateError);
  EXPECT_THROW(ens.predict(Vector::Zero(3), Vector::Zero(1), 5, rng), InputError);
  EXPECT_THROW(ens.validation_loss({}), PreconditionError);
  EnsembleConfig bad = small_config();
  bad.elite_count = 3;
  EXPECT_THROW(ProbabilisticEnsemble(Direction::kForward, 3, 1, bad, rng), InputError);
}

TEST(Ensemble, MemberLossGradientMatchesFiniteDifferences) {
  for (Direction dir : {Direction::kForward, Direction::kBackward}) {
    for (int instance = 0; instance < 3; ++instance) {
      Rng rng(30 + instance);
      EnsembleConfig cfg = small_config();
      cfg.hidden_sizes = {6, 5};
      ProbabilisticEnsemble ens(dir, 3, 1, cfg, rng);
      const Matrix x = rng.normal_matrix(4, 8);
      const Matrix y = rng.normal_matrix(4, 8);
      for (HeadMask mask : {HeadMask{true, true}, HeadMask{true, false}, HeadMask{false, true}}) {
        nn::ParameterStore grads = ens.member(1).params().zeros_like();
        ens.member_loss(1, x, y, mask, &grads);
        const auto loss = [&] { return ens.member_loss(1, x, y, mask, nullptr); };
        EXPECT_LT(max_gradient_error(ens.member(1).params(), grads, loss), 1e-4);
      }
    }
  }
}

TEST(Ensemble, DisjointBootstrapsGiveDifferentMembers) {
  Rng rng(40);
  LinearModel sys = make_linear(Direction::kForward);
  const auto data = linear_data(sys, 200, rng);
  EnsembleConfig cfg = small_config();
  ProbabilisticEnsemble ens(Direction::kForward, 3, 1, cfg, rng);
  // Identical initial weights so that only the data can separate them.
  ens.member(1).params() = ens.member(0).params();
  TrainOptions opts = epochs(5);
  opts.forced_bootstrap.resize(2);
  for (std::size_t i = 0; i < 90; ++i) opts.forced_bootstrap[0].push_back(i);
  for (std::size_t i = 90; i < 180; ++i) opts.forced_bootstrap[1].push_back(i);
  ens.train(data, opts, rng);
  EXPECT_NE(ens.member(0).params().flatten(), ens.member(1).params().flatten());
}

TEST(Ensemble, TrainingIsDeterministic) {
  Rng data_rng(41);
  const auto data = linear_data(make_linear(Direction::kForward), 300, data_rng);
  auto run = [&] {
    Rng rng(42);
    ProbabilisticEnsemble ens(Direction::kBackward, 3, 1, small_config(), rng);
    ens.train(data, epochs(3), rng);
    return ens.member(0).params().flatten();
  };
  EXPECT_EQ(run(), run());
}

TEST(Ensemble, CheckpointRoundTrip) {
  auto& f = LinearFixture::get();
  nn::Checkpoint ckpt;
  f.backward.save(ckpt, "bwd");
  const ProbabilisticEnsemble back =
      ProbabilisticEnsemble::load(nn::Checkpoint::deserialize(ckpt.serialize()), "bwd", small_config());
  EXPECT_EQ(back.direction(), Direction::kBackward);
  EXPECT_EQ(back.elites(), f.backward.elites());
  const Matrix s = stack_states(f.test, true), a = stack_actions(f.test);
  EXPECT_EQ(back.mean(s, a).states, f.backward.mean(s, a).states);
}

TEST(Normalizer, RoundTrip) {
  Rng rng(50);
  Matrix data = rng.normal_matrix(4, 100) * 3.0;
  data.row(2).setConstant(7.0);
  Normalizer n;
  n.fit(data);
  EXPECT_GT(n.stddev().minCoeff(), 0.0);
  EXPECT_EQ(n.stddev()[2], 1.0);
  const Matrix z = rng.normal_matrix(4, 10);
  EXPECT_LT((n.normalize(n.denormalize(z)) - z).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_LT((n.denormalize(n.normalize(data)) - data).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(ExactPendulum, ForwardMatchesEnvironmentAndBackwardInverts) {
  const ExactPendulumModel fwd(Direction::kForward), bwd(Direction::kBackward);
  Rng rng(60);
  for (int i = 0; i < 200; ++i) {
    const env::PendulumState s{rng.uniform(-3.0, 3.0), rng.uniform(-4, 4)};
    const Vector a = Vector::Constant(1, rng.uniform(-2, 2));
    env::PendulumState next;
    const env::StepResult step = env::Pendulum::step_from(s, a, &next);
    const Matrix obs = env::pendulum_observation(s);
    const ModelStep f = fwd.mean(obs, a);
    EXPECT_LT((f.states.col(0) - step.observation).norm(), 1e-12);
    EXPECT_NEAR(f.rewards[0], step.reward, 1e-12);
    const ModelStep b = bwd.mean(Matrix(step.observation), a);
    EXPECT_LT((b.states.col(0) - obs).norm(), 1e-9);
    EXPECT_NEAR(b.rewards[0], step.reward, 1e-9);
  }
}
