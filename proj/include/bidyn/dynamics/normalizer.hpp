#pragma once

#include "bidyn/common/types.hpp"

namespace bidyn::dynamics {

// Per-feature standardization fitted on a batch (one sample per column).
class Normalizer {
 public:
  Normalizer() = default;
  explicit Normalizer(Eigen::Index dim);

  // Features with (near) zero spread keep std = 1. Throws NumericalError when
  // the statistics overflow.
  void fit(const Matrix& data);

  Matrix normalize(const Matrix& x) const;
  Matrix denormalize(const Matrix& z) const;

  const Vector& mean() const { return mean_; }
  const Vector& stddev() const { return std_; }
  void set(Vector mean, Vector stddev);
  Eigen::Index dim() const { return mean_.size(); }

 private:
  Vector mean_;
  Vector std_;
};

}  // namespace bidyn::dynamics
