#pragma once

#include <Eigen/Core>

namespace bidyn {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Batches are stored column-major: one column per sample.
using Batch = Eigen::MatrixXd;

inline bool all_finite(const Eigen::Ref<const Matrix>& m) {
  return m.allFinite();
}

}  // namespace bidyn
