#include "bidyn/rollout/state_sampling.hpp"

#include <cmath>
#include <random>

#include "bidyn/common/errors.hpp"

namespace bidyn {

Vector boltzmann_probabilities(const Vector& values, double beta) {
  if (values.size() == 0) throw PreconditionError("boltzmann_probabilities: no values");
  if (!(beta >= 0.0)) throw InputError("boltzmann_probabilities: beta must be >= 0");
  if (!values.allFinite()) throw NumericalError("boltzmann_probabilities: non-finite value");
  const Vector z = beta * values;
  const Vector w = (z.array() - z.maxCoeff()).exp().matrix();
  return w / w.sum();
}

Matrix boltzmann_sample_states(const ReplayBuffer& buffer, const ValueFn& value_fn, double beta,
                               std::size_t n, Rng& rng, std::size_t pool_size) {
  if (buffer.empty()) throw PreconditionError("boltzmann_sample_states: empty buffer");
  if (!(beta >= 0.0)) throw InputError("boltzmann_sample_states: beta must be >= 0");
  if (pool_size == 0) throw InputError("boltzmann_sample_states: pool_size must be positive");

  const bool whole = buffer.size() <= pool_size;
  const std::size_t m = whole ? buffer.size() : pool_size;
  const auto dim = buffer.at(0).s.size();
  Matrix pool(dim, static_cast<Eigen::Index>(m));
  for (std::size_t j = 0; j < m; ++j)
    pool.col(static_cast<Eigen::Index>(j)) = buffer.at(whole ? j : rng.index(buffer.size())).s;

  Matrix out(dim, static_cast<Eigen::Index>(n));
  if (beta == 0.0) {
    for (std::size_t j = 0; j < n; ++j)
      out.col(static_cast<Eigen::Index>(j)) = pool.col(static_cast<Eigen::Index>(rng.index(m)));
    return out;
  }
  const Vector values = value_fn(pool);
  if (values.size() != pool.cols())
    throw InputError("boltzmann_sample_states: value_fn returned wrong count");
  const Vector p = boltzmann_probabilities(values, beta);
  std::discrete_distribution<std::size_t> dist(p.data(), p.data() + p.size());
  for (std::size_t j = 0; j < n; ++j)
    out.col(static_cast<Eigen::Index>(j)) = pool.col(static_cast<Eigen::Index>(dist(rng.engine())));
  return out;
}

}  // namespace bidyn
