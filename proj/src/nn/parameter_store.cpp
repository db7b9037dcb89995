#include "bidyn/nn/parameter_store.hpp"

#include "bidyn/common/errors.hpp"

namespace bidyn::nn {

void ParameterStore::add(std::string name, Matrix value) {
  entries_.push_back({std::move(name), std::move(value)});
}

int ParameterStore::find(const std::string& name) const {
  for (std::size_t i = 0; i < entries_.size(); ++i)
    if (entries_[i].name == name) return static_cast<int>(i);
  return -1;
}

Eigen::Index ParameterStore::total_count() const {
  Eigen::Index n = 0;
  for (const auto& e : entries_) n += e.value.size();
  return n;
}

bool ParameterStore::all_finite() const {
  for (const auto& e : entries_)
    if (!e.value.allFinite()) return false;
  return true;
}

bool ParameterStore::same_shape(const ParameterStore& other) const {
  if (other.size() != size()) return false;
  for (std::size_t i = 0; i < size(); ++i) {
    if (entries_[i].value.rows() != other[i].rows() || entries_[i].value.cols() != other[i].cols())
      return false;
  }
  return true;
}

ParameterStore ParameterStore::zeros_like() const {
  ParameterStore out;
  for (const auto& e : entries_) out.add(e.name, Matrix::Zero(e.value.rows(), e.value.cols()));
  return out;
}

void ParameterStore::set_zero() {
  for (auto& e : entries_) e.value.setZero();
}

Vector ParameterStore::flatten() const {
  Vector flat(total_count());
  Eigen::Index offset = 0;
  for (const auto& e : entries_) {
    flat.segment(offset, e.value.size()) = e.value.reshaped();
    offset += e.value.size();
  }
  return flat;
}

void ParameterStore::unflatten(const Vector& flat) {
  if (flat.size() != total_count()) throw InputError("ParameterStore::unflatten: size mismatch");
  Eigen::Index offset = 0;
  for (auto& e : entries_) {
    e.value.reshaped() = flat.segment(offset, e.value.size());
    offset += e.value.size();
  }
}

void ParameterStore::add_scaled(const ParameterStore& other, double scale) {
  if (!same_shape(other)) throw InputError("ParameterStore::add_scaled: shape mismatch");
  for (std::size_t i = 0; i < size(); ++i) entries_[i].value += scale * other[i];
}

void ParameterStore::polyak_from(const ParameterStore& source, double tau) {
  if (!same_shape(source)) throw InputError("ParameterStore::polyak_from: shape mismatch");
  for (std::size_t i = 0; i < size(); ++i)
    entries_[i].value = (1.0 - tau) * entries_[i].value + tau * source[i];
}

}  // namespace bidyn::nn
