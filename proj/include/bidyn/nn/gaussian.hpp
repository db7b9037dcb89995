#pragma once

#include "bidyn/common/types.hpp"

namespace bidyn::nn {

struct LogVarBounds {
  double min = -10.0;
  double max = 0.5;
};

// Diagonal Gaussian.
struct GaussianPrediction {
  Vector mean;
  Vector log_var;
};

double softplus(double x);
double sigmoid(double x);
Matrix softplus(const Matrix& x);
Matrix sigmoid(const Matrix& x);

// Smoothly saturates raw network outputs into [bounds.min, bounds.max].
// When d_raw is non-null it receives d log_var / d raw elementwise.
Matrix soft_bound_log_var(const Matrix& raw, const LogVarBounds& bounds, Matrix* d_raw = nullptr);

// Per-sample Gaussian negative log-likelihood without constants:
//   (mean - target)^T Sigma^-1 (mean - target) + log det Sigma
// Throws InputError on mismatched dimensions.
double gaussian_nll(const GaussianPrediction& pred, const Vector& target);


// Mean over the batch of the weighted per-dimension NLL. `raw` stacks the
// mean rows on top of the raw log-variance rows (2 d x batch); `weights`
// (length d) masks or scales output dimensions. When d_raw is non-null it
// receives d loss / d raw.
double batch_gaussian_nll(const Matrix& raw, const Matrix& target, const Vector& weights,
                          const LogVarBounds& bounds, Matrix* d_raw = nullptr);

}  // namespace bidyn::nn
