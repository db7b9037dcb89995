#include "bidyn/nn/gaussian.hpp"

#include <cmath>

#include "bidyn/common/errors.hpp"

namespace bidyn::nn {

double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

Matrix softplus(const Matrix& x) {
  return x.unaryExpr([](double v) { return softplus(v); });
}

Matrix sigmoid(const Matrix& x) {
  return x.unaryExpr([](double v) { return sigmoid(v); });
}

Matrix soft_bound_log_var(const Matrix& raw, const LogVarBounds& bounds, Matrix* d_raw) {
  const Matrix upper_gap = (bounds.max - raw.array()).matrix();
  const Matrix capped = (bounds.max - softplus(upper_gap).array()).matrix();
  const Matrix lower_gap = (capped.array() - bounds.min).matrix();
  // The outer softplus can overshoot max by at most log(1 + exp(min - max));
  // the clamp removes that sliver, where the derivative is already ~0.
  Matrix log_var = (bounds.min + softplus(lower_gap).array()).min(bounds.max).matrix();
  if (d_raw != nullptr) *d_raw = (sigmoid(upper_gap).array() * sigmoid(lower_gap).array()).matrix();
  return log_var;
}

double gaussian_nll(const GaussianPrediction& pred, const Vector& target) {
  if (pred.mean.size() != target.size() || pred.log_var.size() != target.size())
    throw InputError("gaussian_nll: dimension mismatch");
  const Eigen::ArrayXd diff = pred.mean - target;
  return (diff.square() * (-pred.log_var.array()).exp()).sum() + pred.log_var.sum();
}

double batch_gaussian_nll(const Matrix& raw, const Matrix& target, const Vector& weights,
                          const LogVarBounds& bounds, Matrix* d_raw) {
  const Eigen::Index d = target.rows();
  const Eigen::Index n = target.cols();
  if (raw.rows() != 2 * d || raw.cols() != n || weights.size() != d)
    throw InputError("batch_gaussian_nll: dimension mismatch");
  if (n == 0) throw InputError("batch_gaussian_nll: empty batch");

  Matrix d_lv_d_raw;
  const Matrix log_var = soft_bound_log_var(raw.bottomRows(d), bounds, d_raw ? &d_lv_d_raw : nullptr);
  const Eigen::ArrayXXd diff = raw.topRows(d).array() - target.array();
  const Eigen::ArrayXXd inv_var = (-log_var.array()).exp();
  const Eigen::ArrayXXd w = weights.array().replicate(1, n);
  const double inv_n = 1.0 / static_cast<double>(n);

  const double loss = (w * (diff.square() * inv_var + log_var.array())).sum() * inv_n;
  if (d_raw != nullptr) {
    d_raw->resize(2 * d, n);
    d_raw->topRows(d) = (w * 2.0 * diff * inv_var * inv_n).matrix();
    d_raw->bottomRows(d) =
        (w * (1.0 - diff.square() * inv_var) * inv_n * d_lv_d_raw.array()).matrix();
  }
  return loss;
}

}  // namespace bidyn::nn
