#pragma once

#include "degnse/modes.hpp"

#include <Eigen/Core>

#include <cstdint>

namespace degnse {

// Stateless 64-bit mixer (splitmix64 finalizer).
std::uint64_t mix64(std::uint64_t x);

// Deterministic key splitting: child seed for (parent, stream label, index).
std::uint64_t split_seed(std::uint64_t parent, std::uint64_t label, std::uint64_t index = 0);

// Standard normal drawn from a counter: identical inputs give identical bits.
double counter_normal(std::uint64_t seed, std::uint64_t step, std::uint64_t key, std::uint64_t comp);

// Brownian increments on a fine grid of width dt_base. Each (step, mode, component)
// draw is keyed by the lattice triple, not by truncation position, so paths agree
// across truncations and a coarse increment is the exact sum of its fine ones.
class NoisePath {
 public:
  NoisePath(std::uint64_t seed, double dt_base);

  std::uint64_t seed() const { return seed_; }
  double dt_base() const { return dt_base_; }

  // Increment over fine steps [step*stride, (step+1)*stride), length 2P on t.
  Eigen::VectorXd increment(const Truncation& t, std::int64_t step, int stride = 1) const;

 private:
  std::uint64_t seed_;
  double dt_base_;
};

}  // namespace degnse
