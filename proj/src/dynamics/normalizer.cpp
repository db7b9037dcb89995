#include "bidyn/dynamics/normalizer.hpp"

#include "bidyn/common/errors.hpp"

namespace bidyn::dynamics {

Normalizer::Normalizer(Eigen::Index dim) : mean_(Vector::Zero(dim)), std_(Vector::Ones(dim)) {}

void Normalizer::fit(const Matrix& data) {
  if (data.cols() == 0) throw PreconditionError("Normalizer::fit: empty data");
  mean_ = data.rowwise().mean();
  const Matrix centered = data.colwise() - mean_;
  std_ = (centered.array().square().rowwise().sum() / static_cast<double>(data.cols())).sqrt();
  if (!mean_.allFinite() || !std_.allFinite())
    throw NumericalError("Normalizer::fit: non-finite statistics (data overflow)");
  for (Eigen::Index i = 0; i < std_.size(); ++i)
    if (!(std_[i] > 1e-12)) std_[i] = 1.0;
}

Matrix Normalizer::normalize(const Matrix& x) const {
  if (x.rows() != mean_.size()) throw InputError("Normalizer: dimension mismatch");
  return ((x.colwise() - mean_).array().colwise() / std_.array()).matrix();
}

Matrix Normalizer::denormalize(const Matrix& z) const {
  if (z.rows() != mean_.size()) throw InputError("Normalizer: dimension mismatch");
  return ((z.array().colwise() * std_.array()).matrix().colwise() + mean_);
}

void Normalizer::set(Vector mean, Vector stddev) {
  if (mean.size() != stddev.size()) throw InputError("Normalizer::set: size mismatch");
  if (!(stddev.array() > 0.0).all()) throw InputError("Normalizer::set: std must be positive");
  mean_ = std::move(mean);
  std_ = std::move(stddev);
}

}  // namespace bidyn::dynamics
