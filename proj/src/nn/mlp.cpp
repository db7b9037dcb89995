#include "bidyn/nn/mlp.hpp"

#include <cmath>

#include "bidyn/common/errors.hpp"

namespace bidyn::nn {
namespace {

void apply_activation(Activation a, const Matrix& pre, Matrix* out) {
  switch (a) {
    case Activation::kRelu:
      *out = pre.cwiseMax(0.0);
      break;
    case Activation::kTanh:
      *out = pre.array().tanh();
      break;
    case Activation::kSwish:
      *out = pre.array() / (1.0 + (-pre.array()).exp());
      break;
    case Activation::kIdentity:
      *out = pre;
      break;
  }
}

// d_post -> d_pre in place.
void activation_backward(Activation a, const Matrix& pre, Matrix* grad) {
  switch (a) {
    case Activation::kRelu:
      grad->array() *= (pre.array() > 0.0).cast<double>();
      break;
    case Activation::kTanh:
      grad->array() *= 1.0 - pre.array().tanh().square();
      break;
    case Activation::kSwish: {
      const auto sig = 1.0 / (1.0 + (-pre.array()).exp());
      grad->array() *= sig * (1.0 + pre.array() * (1.0 - sig));
      break;
    }
    case Activation::kIdentity:
      break;
  }
}

}  // namespace

std::string to_string(Activation a) {
  switch (a) {
    case Activation::kRelu: return "relu";
    case Activation::kTanh: return "tanh";
    case Activation::kSwish: return "swish";
    case Activation::kIdentity: return "identity";
  }
  return "unknown";
}

Activation activation_from_string(const std::string& name) {
  if (name == "relu") return Activation::kRelu;
  if (name == "tanh") return Activation::kTanh;
  if (name == "swish") return Activation::kSwish;
  if (name == "identity") return Activation::kIdentity;
  throw InputError("unknown activation '" + name + "'");
}

void MlpSpec::validate() const {
  if (input_dim < 1 || output_dim < 1) throw InputError("MlpSpec: dims must be >= 1");
  for (int h : hidden_sizes)
    if (h < 1) throw InputError("MlpSpec: hidden sizes must be >= 1");
}

Mlp::Mlp(MlpSpec spec) : spec_(std::move(spec)) {
  spec_.validate();
  int in = spec_.input_dim;
  std::vector<int> outs = spec_.hidden_sizes;
  outs.push_back(spec_.output_dim);
  for (std::size_t l = 0; l < outs.size(); ++l) {
    params_.add("W" + std::to_string(l), Matrix::Zero(outs[l], in));
    params_.add("b" + std::to_string(l), Matrix::Zero(outs[l], 1));
    in = outs[l];
  }
}

Mlp::Mlp(MlpSpec spec, Rng& rng) : Mlp(std::move(spec)) {
  for (int l = 0; l < num_layers(); ++l) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(weight(l).cols()));
    for (Eigen::Index j = 0; j < weight(l).cols(); ++j)
      for (Eigen::Index i = 0; i < weight(l).rows(); ++i) weight(l)(i, j) = rng.uniform(-bound, bound);
    for (Eigen::Index i = 0; i < bias(l).rows(); ++i) bias(l)(i, 0) = rng.uniform(-bound, bound);
  }
}

void Mlp::check_input(const Matrix& input) const {
  if (input.rows() != spec_.input_dim)
    throw InputError("Mlp: expected input dim " + std::to_string(spec_.input_dim) + ", got " +
                     std::to_string(input.rows()));
}

Vector Mlp::forward(const Vector& input) const {
  return forward(Matrix(input)).col(0);
}

Matrix Mlp::forward(const Matrix& input) const {
  check_input(input);
  Matrix x = input;
  Matrix pre;
  for (int l = 0; l < num_layers(); ++l) {
    pre.noalias() = weight(l) * x;
    pre.colwise() += bias(l).col(0);
    if (l + 1 < num_layers()) {
      apply_activation(spec_.activation, pre, &x);
    } else {
      x.swap(pre);
    }
  }
  return x;
}

Matrix Mlp::forward(const Matrix& input, Cache* cache) const {
  check_input(input);
  cache->inputs.resize(num_layers());
  cache->pre.resize(num_layers() - 1);
  cache->inputs[0] = input;
  Matrix out;
  for (int l = 0; l < num_layers(); ++l) {
    Matrix pre;
    pre.noalias() = weight(l) * cache->inputs[l];
    pre.colwise() += bias(l).col(0);
    if (l + 1 < num_layers()) {
      apply_activation(spec_.activation, pre, &cache->inputs[l + 1]);
      cache->pre[l] = std::move(pre);
    } else {
      out = std::move(pre);
    }
  }
  return out;
}

Matrix Mlp::backward(const Cache& cache, const Matrix& d_out, ParameterStore* grads) const {
  if (d_out.rows() != spec_.output_dim || d_out.cols() != cache.inputs[0].cols())
    throw InputError("Mlp::backward: gradient shape mismatch");
  Matrix delta = d_out;
  for (int l = num_layers() - 1; l >= 0; --l) {
    if (grads != nullptr) {
      (*grads)[2 * l].noalias() += delta * cache.inputs[l].transpose();
      (*grads)[2 * l + 1].noalias() += delta.rowwise().sum();
    }
    Matrix d_in;
    d_in.noalias() = weight(l).transpose() * delta;
    if (l > 0) activation_backward(spec_.activation, cache.pre[l - 1], &d_in);
    delta.swap(d_in);
  }
  return delta;
}

}  // namespace bidyn::nn
