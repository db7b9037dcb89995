#pragma once

#include <stdexcept>

#include <Eigen/LU>

#include "bidyn/dynamics/model.hpp"

namespace bidyn::testing {

// Exact deterministic linear system s' = A s + B a with reward
// r = c.s + d.a on the earlier state. The backward direction inverts A.
class LinearModel final : public dynamics::DynamicsModel {
 public:
  LinearModel(dynamics::Direction direction, Matrix a, Matrix b, Vector c, Vector d)
      : direction_(direction), a_(std::move(a)), b_(std::move(b)), c_(std::move(c)), d_(std::move(d)),
        a_inv_(a_.inverse()) {}

  dynamics::Direction direction() const override { return direction_; }
  int state_dim() const override { return static_cast<int>(a_.rows()); }
  int action_dim() const override { return static_cast<int>(b_.cols()); }
  bool ready() const override { return true; }
  int draw_member(Rng&) const override { return 0; }

  dynamics::ModelStep sample(const Matrix& states, const Matrix& actions, std::span<const int>,
                             Rng&) const override {
    return mean(states, actions);
  }

  dynamics::ModelStep mean(const Matrix& states, const Matrix& actions) const override {
    dynamics::ModelStep out;
    if (direction_ == dynamics::Direction::kForward) {
      out.states = a_ * states + b_ * actions;
      out.rewards = (c_.transpose() * states + d_.transpose() * actions).transpose();
    } else {
      out.states = a_inv_ * (states - b_ * actions);
      out.rewards = (c_.transpose() * out.states + d_.transpose() * actions).transpose();
    }
    return out;
  }

  const Matrix& a() const { return a_; }
  const Matrix& b() const { return b_; }
  const Vector& c() const { return c_; }
  const Vector& d() const { return d_; }

 private:
  dynamics::Direction direction_;
  Matrix a_, b_;
  Vector c_, d_;
  Matrix a_inv_;
};

// A model that reports itself untrained.
class UntrainedModel final : public dynamics::DynamicsModel {
 public:
  explicit UntrainedModel(dynamics::Direction d) : direction_(d) {}
  dynamics::Direction direction() const override { return direction_; }
  int state_dim() const override { return 3; }
  int action_dim() const override { return 1; }
  bool ready() const override { return false; }
  int draw_member(Rng&) const override { return 0; }
  dynamics::ModelStep sample(const Matrix&, const Matrix&, std::span<const int>, Rng&) const override {
    throw std::logic_error("untrained");
  }
  dynamics::ModelStep mean(const Matrix&, const Matrix&) const override {
    throw std::logic_error("untrained");
  }

 private:
  dynamics::Direction direction_;
};

}  // namespace bidyn::testing
