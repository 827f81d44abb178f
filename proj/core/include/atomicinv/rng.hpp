#pragma once

#include "atomicinv/types.hpp"

#include <cstdint>
#include <initializer_list>
#include <random>

namespace atomicinv {

/// SplitMix64 finalizer. Used to derive independent stream seeds.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Seed for the stream addressed by `path` under `master`, e.g.
/// derive_seed(master, {grid_index, replicate, kDesignStream}).
std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> path);

/// Explicitly seeded generator. Not thread-safe; give each worker its own
/// instance seeded through derive_seed.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(mix64(seed)) {}

  double normal() { return normal_(engine_); }
  double uniform() { return uniform_(engine_); }
  std::uint64_t next_u64() { return engine_(); }
  /// Uniform integer in [0, bound).
  Index uniform_index(Index bound);

  Vector normal_vector(Index n);
  Matrix normal_matrix(Index rows, Index cols);
  /// Uniform point on the unit sphere in R^n.
  Vector unit_sphere(Index n);
  /// Uniform point in the unit Euclidean ball in R^n.
  Vector unit_ball(Index n);

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

}  // namespace atomicinv
