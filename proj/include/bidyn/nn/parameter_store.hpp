#pragma once

#include <string>
#include <vector>

#include "bidyn/common/types.hpp"

namespace bidyn::nn {

// Named dense tensors (stored as matrices; biases are n x 1). Gradients and
// optimizer moments reuse the same type so shapes line up entry by entry.
class ParameterStore {
 public:
  struct Entry {
    std::string name;
    Matrix value;
  };

  ParameterStore() = default;

  void add(std::string name, Matrix value);

  std::size_t size() const { return entries_.size(); }
  Entry& entry(std::size_t i) { return entries_[i]; }
  const Entry& entry(std::size_t i) const { return entries_[i]; }
  Matrix& operator[](std::size_t i) { return entries_[i].value; }
  const Matrix& operator[](std::size_t i) const { return entries_[i].value; }

  // Index of the entry with this name, or -1.
  int find(const std::string& name) const;

  Eigen::Index total_count() const;
  bool all_finite() const;
  bool same_shape(const ParameterStore& other) const;

  ParameterStore zeros_like() const;
  void set_zero();

  Vector flatten() const;
  void unflatten(const Vector& flat);

  // this += scale * other
  void add_scaled(const ParameterStore& other, double scale);

  // Polyak average: this = (1 - tau) * this + tau * source.
  void polyak_from(const ParameterStore& source, double tau);

 private:
  std::vector<Entry> entries_;
};

}  // namespace bidyn::nn
