#pragma once

#include <string>
#include <vector>

#include "bidyn/common/random.hpp"
#include "bidyn/common/types.hpp"
#include "bidyn/nn/parameter_store.hpp"

namespace bidyn::nn {

enum class Activation { kRelu, kTanh, kSwish, kIdentity };

std::string to_string(Activation a);
Activation activation_from_string(const std::string& name);

struct MlpSpec {
  int input_dim = 0;
  int output_dim = 0;
  std::vector<int> hidden_sizes;
  Activation activation = Activation::kRelu;

  void validate() const;
};

// Fully connected network, activation on hidden layers, linear output.
// Parameters are laid out as W0, b0, W1, b1, ... with W_l of shape
// (out_l x in_l). Inputs and outputs are batches with one sample per column.
class Mlp {
 public:
  // Intermediate values of one forward pass, needed for backprop.
  struct Cache {
    std::vector<Matrix> inputs;  // inputs[l] = input to layer l
    std::vector<Matrix> pre;     // pre-activations of hidden layers
  };

  Mlp() = default;
  Mlp(MlpSpec spec, Rng& rng);
  // Zero-initialized network.
  explicit Mlp(MlpSpec spec);

  const MlpSpec& spec() const { return spec_; }
  ParameterStore& params() { return params_; }
  const ParameterStore& params() const { return params_; }
  int num_layers() const { return static_cast<int>(spec_.hidden_sizes.size()) + 1; }

  Matrix& weight(int layer) { return params_[2 * layer]; }
  Matrix& bias(int layer) { return params_[2 * layer + 1]; }
  const Matrix& weight(int layer) const { return params_[2 * layer]; }
  const Matrix& bias(int layer) const { return params_[2 * layer + 1]; }

  Vector forward(const Vector& input) const;
  Matrix forward(const Matrix& input) const;
  Matrix forward(const Matrix& input, Cache* cache) const;

  // Backpropagates d_out (output_dim x batch). Parameter gradients are
  // accumulated into *grads when non-null; returns d loss / d input.
  Matrix backward(const Cache& cache, const Matrix& d_out, ParameterStore* grads) const;

 private:
  void check_input(const Matrix& input) const;

  MlpSpec spec_;
  ParameterStore params_;
};

}  // namespace bidyn::nn
