#pragma once

#include <functional>

#include "bidyn/common/random.hpp"
#include "bidyn/rollout/replay_buffer.hpp"

namespace bidyn {

// Maps a batch of states (one per column) to their values.
using ValueFn = std::function<Vector(const Matrix&)>;

// softmax(beta * values) with max-subtraction.
Vector boltzmann_probabilities(const Vector& values, double beta);

// Draws n states with replacement from p(s) ∝ exp(beta V(s)). V is evaluated
// on a candidate pool of `pool_size` states drawn uniformly from the buffer
// (the whole buffer when it is no larger than the pool). Values are not
// computed when beta is 0. Returns the states as columns.
Matrix boltzmann_sample_states(const ReplayBuffer& buffer, const ValueFn& value_fn, double beta,
                               std::size_t n, Rng& rng, std::size_t pool_size = 1000);

}  // namespace bidyn
