#include "bidyn/rollout/replay_buffer.hpp"

#include <algorithm>
#include <cmath>

#include "bidyn/common/errors.hpp"

namespace bidyn {

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw InputError("ReplayBuffer: capacity must be positive");
  items_.reserve(std::min<std::size_t>(capacity, 1 << 16));
}

void ReplayBuffer::push(Transition t) {
  if (!std::isfinite(t.r)) throw InputError("ReplayBuffer: non-finite reward");
  ++inserted_;
  if (items_.size() < capacity_) {
    items_.push_back(std::move(t));
    return;
  }
  items_[head_] = std::move(t);
  head_ = (head_ + 1) % capacity_;
}

void ReplayBuffer::clear() {
  items_.clear();
  head_ = 0;
}

const Transition& ReplayBuffer::at(std::size_t i) const {
  if (i >= items_.size()) throw InputError("ReplayBuffer::at: index out of range");
  return items_[(head_ + i) % items_.size()];
}

std::vector<const Transition*> ReplayBuffer::sample(std::size_t n, Rng& rng) const {
  if (items_.empty()) throw PreconditionError("ReplayBuffer::sample: empty buffer");
  std::vector<const Transition*> out(n);
  for (auto& p : out) p = &items_[rng.index(items_.size())];
  return out;
}

std::vector<Transition> ReplayBuffer::recent(std::size_t n) const {
  const std::size_t k = std::min(n, items_.size());
  std::vector<Transition> out;
  out.reserve(k);
  for (std::size_t i = items_.size() - k; i < items_.size(); ++i) out.push_back(at(i));
  return out;
}

std::vector<Transition> ReplayBuffer::to_vector() const { return recent(items_.size()); }

}  // namespace bidyn
