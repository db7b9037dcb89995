#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>

#include "bidyn/common/errors.hpp"
#include "bidyn/common/random.hpp"
#include "bidyn/nn/adam.hpp"
#include "bidyn/nn/checkpoint.hpp"
#include "bidyn/nn/gaussian.hpp"
#include "bidyn/nn/mlp.hpp"
#include "support/finite_difference.hpp"

using namespace bidyn;
using namespace bidyn::nn;
using bidyn::testing::max_gradient_error;

namespace {

MlpSpec small_spec(Activation act) { return MlpSpec{3, 2, {5, 4}, act}; }

// Sum of squares of the output, scaled; a generic nonlinear scalar loss.
double output_loss(const Mlp& net, const Matrix& x, const Matrix& y) {
  return (net.forward(x) - y).squaredNorm() / static_cast<double>(x.cols());
}

}  // namespace

TEST(Mlp, ZeroWeightsGiveZeroOutput) {
  const Mlp net(small_spec(Activation::kTanh));
  Rng rng(1);
  EXPECT_TRUE(net.forward(rng.normal_vector(3)).isZero());
}

TEST(Mlp, IdentityLinearLayer) {
  Mlp net(MlpSpec{4, 4, {}, Activation::kIdentity});
  net.weight(0).setIdentity();
  Rng rng(2);
  const Vector x = rng.normal_vector(4);
  EXPECT_EQ(net.forward(x), x);
}

TEST(Mlp, ForwardIsPureAndBatchConsistent) {
  Rng rng(3);
  const Mlp net(small_spec(Activation::kSwish), rng);
  const Matrix x = rng.normal_matrix(3, 6);
  const Matrix y1 = net.forward(x);
  EXPECT_EQ(y1, net.forward(x));
  for (int j = 0; j < 6; ++j) EXPECT_TRUE(net.forward(Vector(x.col(j))).isApprox(y1.col(j), 1e-14));
}

TEST(Mlp, DimensionMismatchRejected) {
  Rng rng(4);
  const Mlp net(small_spec(Activation::kRelu), rng);
  EXPECT_THROW(net.forward(Vector(Vector::Zero(2))), InputError);
  EXPECT_THROW((MlpSpec{0, 1, {}, Activation::kRelu}.validate()), InputError);
}

TEST(Mlp, ActivationNamesRoundTrip) {
  for (Activation a : {Activation::kRelu, Activation::kTanh, Activation::kSwish, Activation::kIdentity})
    EXPECT_EQ(activation_from_string(to_string(a)), a);
  EXPECT_THROW(activation_from_string("gelu"), InputError);
}

TEST(Mlp, QuadraticLossGradientAtZero) {
  Mlp net(MlpSpec{3, 2, {}, Activation::kIdentity});
  Vector x(3), y(2);
  x << 1.0, -2.0, 0.5;
  y << 0.3, 4.0;
  Mlp::Cache cache;
  const Matrix out = net.forward(Matrix(x), &cache);
  ParameterStore grads = net.params().zeros_like();
  net.backward(cache, 2.0 * (out - Matrix(y)), &grads);
  EXPECT_TRUE(grads[0].isApprox(-2.0 * y * x.transpose(), 1e-14));
  EXPECT_TRUE(grads[1].isApprox(-2.0 * y, 1e-14));
}

TEST(Mlp, ConstantLossGivesZeroGradient) {
  Rng rng(5);
  const Mlp net(small_spec(Activation::kTanh), rng);
  Mlp::Cache cache;
  const Matrix x = rng.normal_matrix(3, 4);
  net.forward(x, &cache);
  ParameterStore grads = net.params().zeros_like();
  const Matrix dx = net.backward(cache, Matrix::Zero(2, 4), &grads);
  EXPECT_TRUE(grads.flatten().isZero());
  EXPECT_TRUE(dx.isZero());
}

class MlpGradient : public ::testing::TestWithParam<Activation> {};

TEST_P(MlpGradient, MatchesFiniteDifferences) {
  for (int instance = 0; instance < 5; ++instance) {
    Rng rng(100 + instance);
    Mlp net(small_spec(GetParam()), rng);
    Matrix x = rng.normal_matrix(3, 7);
    const Matrix y = rng.normal_matrix(2, 7);
    Mlp::Cache cache;
    const Matrix out = net.forward(x, &cache);
    ParameterStore grads = net.params().zeros_like();
    const Matrix dx = net.backward(cache, 2.0 * (out - y) / 7.0, &grads);
    const auto loss = [&] { return output_loss(net, x, y); };
    EXPECT_LT(max_gradient_error(net.params(), grads, loss), 1e-4);
    EXPECT_LT(max_gradient_error(x, dx, loss), 1e-4);
  }
}

INSTANTIATE_TEST_SUITE_P(Activations, MlpGradient,
                         ::testing::Values(Activation::kTanh, Activation::kSwish, Activation::kRelu,
                                           Activation::kIdentity));

TEST(Adam, ZeroGradientLeavesParametersUnchanged) {
  Rng rng(6);
  Mlp net(small_spec(Activation::kTanh), rng);
  const Vector before = net.params().flatten();
  Adam adam(net.params(), AdamConfig{});
  adam.step(net.params(), net.params().zeros_like());
  EXPECT_EQ(net.params().flatten(), before);
}

TEST(Adam, FirstStepMovesByLearningRate) {
  ParameterStore p;
  p.add("w", Matrix::Constant(2, 3, 1.0));
  ParameterStore g = p.zeros_like();
  g[0] << 0.5, -3.0, 100.0, 1e-3, -0.2, 7.0;
  const double lr = 0.01;
  Adam adam(p, AdamConfig{.lr = lr});
  adam.step(p, g);
  // m_hat = g, v_hat = g^2, so the step is lr * g / (|g| + eps).
  for (Eigen::Index i = 0; i < 6; ++i) {
    const double gi = g[0].data()[i];
    EXPECT_NEAR(p[0].data()[i], 1.0 - lr * gi / (std::abs(gi) + 1e-8), 1e-15);
    EXPECT_NEAR(std::abs(p[0].data()[i] - 1.0), lr, 1e-7);
  }
  EXPECT_EQ(adam.step_count(), 1);
}

TEST(Adam, DeterministicAndRejectsNonFinite) {
  ParameterStore p1, p2;
  p1.add("w", Matrix::Constant(2, 2, 0.5));
  p2 = p1;
  ParameterStore g = p1.zeros_like();
  g[0] << 1, 2, 3, 4;
  Adam a1(p1, {}), a2(p2, {});
  for (int i = 0; i < 3; ++i) {
    a1.step(p1, g);
    a2.step(p2, g);
  }
  EXPECT_EQ(p1.flatten(), p2.flatten());
  g[0](0, 0) = std::nan("");
  EXPECT_THROW(a1.step(p1, g), NumericalError);
}

TEST(Adam, WeightDecayShrinks) {
  ParameterStore p;
  p.add("w", Matrix::Constant(1, 1, 2.0));
  Adam adam(p, AdamConfig{.lr = 0.1, .weight_decay = 0.5});
  adam.step(p, p.zeros_like());
  EXPECT_NEAR(p[0](0, 0), 2.0 * (1.0 - 0.05), 1e-15);
}

TEST(ParameterStore, PolyakIsExact) {
  ParameterStore a, b;
  a.add("w", Matrix::Constant(2, 2, 1.0));
  b.add("w", Matrix::Constant(2, 2, 3.0));
  a.polyak_from(b, 0.25);
  EXPECT_TRUE(a[0].isApproxToConstant(1.5, 1e-15));
  a.polyak_from(b, 1.0);
  EXPECT_EQ(a[0], b[0]);
}

TEST(ParameterStore, FlattenRoundTrip) {
  Rng rng(7);
  Mlp net(small_spec(Activation::kTanh), rng);
  const Vector flat = net.params().flatten();
  EXPECT_EQ(flat.size(), net.params().total_count());
  ParameterStore copy = net.params().zeros_like();
  copy.unflatten(flat);
  EXPECT_EQ(copy.flatten(), flat);
}

TEST(GaussianNll, HandValues) {
  GaussianPrediction p{Vector::Zero(2), Vector::Zero(2)};
  EXPECT_DOUBLE_EQ(gaussian_nll(p, Vector::Zero(2)), 0.0);
  EXPECT_DOUBLE_EQ(gaussian_nll(p, Vector::Unit(2, 0)), 1.0);
  p.log_var = Vector::Constant(2, std::log(2.0));
  EXPECT_NEAR(gaussian_nll(p, Vector::Constant(2, -1.0)), 1.0 + 2.0 * std::log(2.0), 1e-14);
  EXPECT_NEAR(gaussian_nll(p, Vector::Constant(2, -1.0)), 2.386, 1e-3);
  EXPECT_THROW(gaussian_nll(p, Vector::Zero(3)), InputError);
}

TEST(GaussianNll, MinimizedAtTarget) {
  Rng rng(8);
  const Vector target = rng.normal_vector(3);
  const Vector log_var = rng.normal_vector(3) * 0.5;
  const double at_target = gaussian_nll({target, log_var}, target);
  for (int i = 0; i < 100; ++i) {
    EXPECT_GT(gaussian_nll({target + 0.1 * rng.normal_vector(3), log_var}, target), at_target);
  }
  // The mean gradient points away from the target.
  Matrix raw(6, 1), grad;
  raw << target + Vector::Constant(3, 0.2), log_var;
  batch_gaussian_nll(raw, Matrix(target), Vector::Ones(3), LogVarBounds{}, &grad);
  EXPECT_TRUE((grad.topRows(3).array() > 0.0).all());
}

TEST(GaussianNll, SoftBoundStaysInsideRange) {
  const LogVarBounds b;
  Matrix raw(1, 5);
  raw << -1e3, -10.0, 0.0, 0.5, 1e3;
  const Matrix lv = soft_bound_log_var(raw, b);
  EXPECT_TRUE((lv.array() >= b.min).all());
  EXPECT_TRUE((lv.array() <= b.max).all());
  EXPECT_NEAR(lv(0, 2), 0.0, 0.5);
  for (int i = 0; i + 1 < 5; ++i) EXPECT_LE(lv(0, i), lv(0, i + 1));
}

TEST(GaussianNll, BatchGradientMatchesFiniteDifferences) {
  Rng rng(9);
  for (int instance = 0; instance < 5; ++instance) {
    Matrix raw = rng.normal_matrix(6, 5);
    const Matrix target = rng.normal_matrix(3, 5);
    Vector w(3);
    w << 1.0, 0.0, 2.5;
    Matrix grad;
    batch_gaussian_nll(raw, target, w, LogVarBounds{}, &grad);
    const auto loss = [&] { return batch_gaussian_nll(raw, target, w, LogVarBounds{}); };
    EXPECT_LT(max_gradient_error(raw, grad, loss), 1e-4);
  }
}

TEST(GaussianNll, MatchesPerSampleForm) {
  Rng rng(10);
  Matrix raw = rng.normal_matrix(4, 3) * 0.3;
  const Matrix target = rng.normal_matrix(2, 3);
  const Matrix lv = soft_bound_log_var(raw.bottomRows(2), LogVarBounds{});
  double expected = 0.0;
  for (int j = 0; j < 3; ++j)
    expected += gaussian_nll({raw.topRows(2).col(j), lv.col(j)}, target.col(j));
  EXPECT_NEAR(batch_gaussian_nll(raw, target, Vector::Ones(2), LogVarBounds{}), expected / 3.0, 1e-12);
}

TEST(Checkpoint, RoundTripPreservesBits) {
  Rng rng(11);
  const Mlp net(small_spec(Activation::kSwish), rng);
  Checkpoint ckpt;
  save_mlp(ckpt, "net", net);
  ckpt.put_scalar("alpha", 0.123456789012345678);
  const auto path = std::filesystem::temp_directory_path() / "bidyn_test_roundtrip.ckpt";
  ckpt.save(path.string());
  const Checkpoint back = Checkpoint::load(path.string());
  const Mlp loaded = load_mlp(back, "net");
  EXPECT_EQ(loaded.spec().hidden_sizes, net.spec().hidden_sizes);
  EXPECT_EQ(loaded.spec().activation, net.spec().activation);
  EXPECT_EQ(loaded.params().flatten(), net.params().flatten());
  EXPECT_EQ(back.get_scalar("alpha"), 0.123456789012345678);
  std::filesystem::remove(path);
}

TEST(Checkpoint, CorruptInputRejected) {
  Checkpoint ckpt;
  ckpt.put("m", Matrix::Ones(2, 3));
  const std::string bytes = ckpt.serialize();
  EXPECT_EQ(bytes.substr(0, 8), "BIDYNCKP");
  EXPECT_NO_THROW(Checkpoint::deserialize(bytes));
  EXPECT_THROW(Checkpoint::deserialize(bytes.substr(0, bytes.size() - 1)), IoError);
  std::string bad_magic = bytes;
  bad_magic[0] = 'X';
  EXPECT_THROW(Checkpoint::deserialize(bad_magic), IoError);
  std::string bad_version = bytes;
  bad_version[8] = 2;
  EXPECT_THROW(Checkpoint::deserialize(bad_version), IoError);
  EXPECT_THROW(Checkpoint::load("/nonexistent/dir/x.ckpt"), IoError);
  EXPECT_THROW(ckpt.get("missing"), IoError);
}
