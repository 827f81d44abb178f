#pragma once

#include "atomicinv/types.hpp"

#include <cstdint>
#include <optional>

namespace atomicinv {

/// Dense linear operator X : R^p -> R^n for the model Y = X(M) + Z.
///
/// Matrix-valued parameters are vectorized column-major, so the trace
/// regression inner product <X_i, M> is row i of the design times vec(M).
class DesignOperator {
 public:
  DesignOperator() = default;
  explicit DesignOperator(Matrix entries, bool columns_standardized = false);

  static DesignOperator identity(Index p);

  Index rows() const { return entries_.rows(); }
  Index cols() const { return entries_.cols(); }
  const Matrix& matrix() const { return entries_; }
  bool columns_standardized() const { return columns_standardized_; }

  /// X v for a p-vector v.
  Vector apply(const Vector& v) const;
  /// X^T w for an n-vector w.
  Vector adjoint(const Vector& w) const;
  /// X^T X.
  Matrix gram() const;

  /// Copy of this design with every column rescaled to unit l2 norm.
  DesignOperator standardized() const;

 private:
  Matrix entries_;
  bool columns_standardized_ = false;
};

/// n x p design with i.i.d. N(0, 1/n) entries; deterministic in `seed`.
DesignOperator gaussian_ensemble_design(Index n, Index p, std::uint64_t seed);

struct GroundTruth {
  Vector parameter;
  /// Sparsity s, rank r, or a structural tag (p for sign, m for orthogonal).
  Index complexity = 0;
};

struct ProblemInstance {
  DesignOperator design;
  Vector observation;
  /// Noise is N(0, sigma^2 / n * I_n). Zero marks a noiseless instance.
  double noise_level = 1.0;
  Shape shape;
  std::optional<Vector> truth;

  Index n() const { return design.rows(); }
  Index p() const { return design.cols(); }

  /// Throws DimensionError / std::invalid_argument on inconsistent fields.
  void validate() const;
};

/// Y = X(M) + Z with Z ~ N(0, sigma^2/n I_n). sigma == 0 gives Y = X(M).
ProblemInstance simulate_observation(const DesignOperator& design, const GroundTruth& truth,
                                     double sigma, std::uint64_t seed, Shape shape);

/// Overload for vector-shaped parameters.
ProblemInstance simulate_observation(const DesignOperator& design, const GroundTruth& truth,
                                     double sigma, std::uint64_t seed);

// Ground-truth generators for the four structural families.

/// s nonzeros at uniformly random positions, entries +-magnitude.
GroundTruth make_sparse_truth(Index p, Index s, std::uint64_t seed, double magnitude = 1.0);
/// Rank-r p1 x p2 matrix U diag(r, r-1, ..., 1) V^T with Haar-random factors.
GroundTruth make_low_rank_truth(Index p1, Index p2, Index r, std::uint64_t seed);
/// Uniformly random vector in {+1, -1}^p.
GroundTruth make_sign_truth(Index p, std::uint64_t seed);
/// Haar-random m x m orthogonal matrix.
GroundTruth make_orthogonal_truth(Index m, std::uint64_t seed);

}  // namespace atomicinv
