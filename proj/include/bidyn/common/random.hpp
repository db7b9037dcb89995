#pragma once

#include <cstdint>
#include <random>
#include <string_view>

#include "bidyn/common/types.hpp"

namespace bidyn {

// Seeded generator. Every component derives its own named substream so that
// adding draws in one place does not perturb another.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0);

  std::uint64_t seed() const { return seed_; }

  // Independent generator keyed by (this seed, name).
  Rng substream(std::string_view name) const;
  Rng substream(std::string_view name, std::uint64_t index) const;

  double uniform(double lo = 0.0, double hi = 1.0);
  double normal();
  int uniform_int(int lo, int hi_inclusive);
  std::size_t index(std::size_t n);
  Vector normal_vector(Eigen::Index n);
  Matrix normal_matrix(Eigen::Index rows, Eigen::Index cols);

  std::mt19937_64& engine() { return engine_; }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

std::uint64_t mix_seed(std::uint64_t seed, std::string_view name, std::uint64_t index = 0);

}  // namespace bidyn
