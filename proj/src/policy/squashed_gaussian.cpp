#include "bidyn/policy/squashed_gaussian.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "bidyn/common/errors.hpp"
#include "bidyn/nn/gaussian.hpp"

namespace bidyn::policy {
namespace {

constexpr double kHalfLog2Pi = 0.91893853320467274178;
constexpr double kLogStdHalfSpan =
    0.5 * (SquashedGaussianPolicy::kLogStdMax - SquashedGaussianPolicy::kLogStdMin);

// log(1 - tanh(u)^2), stable for large |u|.
double log_one_minus_tanh_sq(double u) {
  return 2.0 * (std::numbers::ln2 - u - nn::softplus(-2.0 * u));
}

}  // namespace

SquashedGaussianPolicy::SquashedGaussianPolicy(int obs_dim, ActionBounds bounds,
                                               std::vector<int> hidden, nn::Activation activation,
                                               Rng& rng)
    : bounds_(std::move(bounds)) {
  if (bounds_.low.size() != bounds_.high.size() || bounds_.low.size() < 1)
    throw InputError("SquashedGaussianPolicy: bad action bounds");
  if (!(bounds_.low.array() < bounds_.high.array()).all())
    throw InputError("SquashedGaussianPolicy: action_low must be < action_high");
  net_ = nn::Mlp({obs_dim, 2 * bounds_.dim(), std::move(hidden), activation}, rng);
}

void SquashedGaussianPolicy::set_net(nn::Mlp net) {
  if (net.spec().output_dim != 2 * act_dim()) throw InputError("SquashedGaussianPolicy: bad network");
  net_ = std::move(net);
}

Matrix SquashedGaussianPolicy::log_std_from_raw(const Matrix& raw) const {
  return (kLogStdMin + kLogStdHalfSpan * (raw.array().tanh() + 1.0)).matrix();
}

SquashedGaussianPolicy::Pass SquashedGaussianPolicy::sample(const Matrix& obs,
                                                           const Matrix& noise) const {
  const int d = act_dim();
  if (noise.rows() != d || noise.cols() != obs.cols())
    throw InputError("SquashedGaussianPolicy::sample: noise shape mismatch");
  Pass p;
  const Matrix out = net_.forward(obs, &p.cache);
  p.noise = noise;
  p.raw_log_std = out.bottomRows(d);
  const Matrix log_std = log_std_from_raw(p.raw_log_std);
  p.std = log_std.array().exp();
  const Matrix u = out.topRows(d) + (p.std.array() * noise.array()).matrix();
  p.squashed = u.array().tanh();
  p.actions = (p.squashed.array().colwise() * bounds_.half_range().array()).matrix();
  p.actions.colwise() += bounds_.center();

  const double log_half_sum = bounds_.half_range().array().log().sum();
  p.log_probs.resize(obs.cols());
  for (Eigen::Index j = 0; j < obs.cols(); ++j) {
    double lp = -log_half_sum - d * kHalfLog2Pi;
    for (int i = 0; i < d; ++i)
      lp += -0.5 * noise(i, j) * noise(i, j) - log_std(i, j) - log_one_minus_tanh_sq(u(i, j));
    p.log_probs[j] = lp;
  }
  return p;
}

SquashedGaussianPolicy::Pass SquashedGaussianPolicy::sample(const Matrix& obs, Rng& rng) const {
  return sample(obs, rng.normal_matrix(act_dim(), obs.cols()));
}

Matrix SquashedGaussianPolicy::backward(const Pass& p, const Matrix& d_actions,
                                        const Vector& d_log_probs,
                                        nn::ParameterStore* grads) const {
  const int d = act_dim();
  const Eigen::Index n = p.noise.cols();
  if (d_actions.rows() != d || d_actions.cols() != n || d_log_probs.size() != n)
    throw InputError("SquashedGaussianPolicy::backward: shape mismatch");
  const Vector half = bounds_.half_range();
  Matrix d_out(2 * d, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    for (int i = 0; i < d; ++i) {
      const double t = p.squashed(i, j);
      const double sig = p.std(i, j);
      const double eps = p.noise(i, j);
      const double da_du = half[i] * (1.0 - t * t);
      const double d_mean = d_actions(i, j) * da_du + d_log_probs[j] * 2.0 * t;
      const double d_log_std =
          d_actions(i, j) * da_du * sig * eps + d_log_probs[j] * (-1.0 + 2.0 * t * sig * eps);
      const double th = std::tanh(p.raw_log_std(i, j));
      d_out(i, j) = d_mean;
      d_out(d + i, j) = d_log_std * kLogStdHalfSpan * (1.0 - th * th);
    }
  }
  return net_.backward(p.cache, d_out, grads);
}

Matrix SquashedGaussianPolicy::deterministic(const Matrix& obs) const {
  const Matrix out = net_.forward(obs);
  Matrix a = (out.topRows(act_dim()).array().tanh().colwise() * bounds_.half_range().array()).matrix();
  a.colwise() += bounds_.center();
  return a;
}

Vector SquashedGaussianPolicy::log_prob(const Matrix& obs, const Matrix& actions) const {
  const int d = act_dim();
  if (actions.rows() != d || actions.cols() != obs.cols())
    throw InputError("SquashedGaussianPolicy::log_prob: shape mismatch");
  const Matrix out = net_.forward(obs);
  const Matrix log_std = log_std_from_raw(out.bottomRows(d));
  const Vector center = bounds_.center();
  const Vector half = bounds_.half_range();
  const double log_half_sum = half.array().log().sum();
  constexpr double kEdge = 1.0 - 1e-6;
  Vector lp(obs.cols());
  for (Eigen::Index j = 0; j < obs.cols(); ++j) {
    double v = -log_half_sum - d * kHalfLog2Pi;
    for (int i = 0; i < d; ++i) {
      const double y = std::clamp((actions(i, j) - center[i]) / half[i], -kEdge, kEdge);
      const double u = std::atanh(y);
      const double eps = (u - out(i, j)) / std::exp(log_std(i, j));
      v += -0.5 * eps * eps - log_std(i, j) - std::log1p(-y * y);
    }
    lp[j] = v;
  }
  return lp;
}

double SquashedGaussianPolicy::nll(const Matrix& obs, const Matrix& actions,
                                   nn::ParameterStore* grads) const {
  const int d = act_dim();
  if (actions.rows() != d || actions.cols() != obs.cols() || obs.cols() == 0)
    throw InputError("SquashedGaussianPolicy::nll: shape mismatch");
  nn::Mlp::Cache cache;
  const Matrix out = net_.forward(obs, &cache);
  const Matrix raw_ls = out.bottomRows(d);
  const Matrix log_std = log_std_from_raw(raw_ls);
  const Vector center = bounds_.center();
  const Vector half = bounds_.half_range();
  const double log_half_sum = half.array().log().sum();
  const auto n = static_cast<double>(obs.cols());
  constexpr double kEdge = 1.0 - 1e-6;

  double total = 0.0;
  Matrix d_out(2 * d, obs.cols());
  for (Eigen::Index j = 0; j < obs.cols(); ++j) {
    double v = log_half_sum + d * kHalfLog2Pi;
    for (int i = 0; i < d; ++i) {
      const double y = std::clamp((actions(i, j) - center[i]) / half[i], -kEdge, kEdge);
      const double u = std::atanh(y);
      const double sig = std::exp(log_std(i, j));
      const double eps = (u - out(i, j)) / sig;
      v += 0.5 * eps * eps + log_std(i, j) + std::log1p(-y * y);
      const double th = std::tanh(raw_ls(i, j));
      d_out(i, j) = -eps / sig / n;
      d_out(d + i, j) = (1.0 - eps * eps) * kLogStdHalfSpan * (1.0 - th * th) / n;
    }
    total += v;
  }
  if (grads != nullptr) net_.backward(cache, d_out, grads);
  return total / n;
}

}  // namespace bidyn::policy
