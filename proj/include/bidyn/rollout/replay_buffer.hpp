#pragma once

#include <cstdint>
#include <vector>

#include "bidyn/common/random.hpp"
#include "bidyn/rollout/transition.hpp"

namespace bidyn {

// Bounded FIFO of transitions. Index 0 is the oldest retained item.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity);

  std::size_t capacity() const { return capacity_; }
  std::size_t size() const { return items_.size(); }
  bool empty() const { return items_.empty(); }
  // Total number of insertions ever made.
  std::uint64_t inserted() const { return inserted_; }

  void push(Transition t);
  void clear();

  const Transition& at(std::size_t i) const;
  // n indices drawn uniformly with replacement.
  std::vector<const Transition*> sample(std::size_t n, Rng& rng) const;
  // The newest min(n, size) items, oldest first.
  std::vector<Transition> recent(std::size_t n) const;
  std::vector<Transition> to_vector() const;

 private:
  std::size_t capacity_;
  std::vector<Transition> items_;
  std::size_t head_ = 0;  // slot of the oldest item once full
  std::uint64_t inserted_ = 0;
};

}  // namespace bidyn
