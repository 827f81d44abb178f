#pragma once

#include "atomicinv/types.hpp"

#include <functional>
#include <span>

namespace atomicinv {

/// Singular value decomposition with singular values sorted descending and
/// each left factor column sign-normalized (first nonzero entry positive,
/// right factor flipped to match).
struct SortedSvd {
  Matrix u;
  Vector s;
  Matrix v;

  Matrix reconstruct() const { return u * s.asDiagonal() * v.transpose(); }
  Matrix reconstruct(const Vector& values) const { return u * values.asDiagonal() * v.transpose(); }
};

SortedSvd sorted_svd(const Matrix& m);

/// Column-major reshape of a length rows*cols vector.
inline Eigen::Map<const Matrix> as_matrix(const Vector& v, Index rows, Index cols) {
  return Eigen::Map<const Matrix>(v.data(), rows, cols);
}

inline Vector vec(const Matrix& m) {
  return Eigen::Map<const Vector>(m.data(), m.size());
}

/// Componentwise soft-thresholding sign(x) * max(|x| - t, 0).
Vector soft_threshold(const Vector& x, double t);

/// Euclidean projection onto {z : ||z||_1 <= radius} by sort-and-threshold.
Vector project_l1_ball(const Vector& x, double radius);

/// Euclidean projection of a nonnegative vector onto {z >= 0 : sum z <= radius}.
Vector project_nonneg_l1_ball(const Vector& x, double radius);

/// Largest eigenvalue of a symmetric positive semidefinite matrix.
double max_eigenvalue(const Matrix& sym);

/// Closest orthogonal matrix in Frobenius norm (polar factor).
Matrix polar_factor(const Matrix& m);

/// Mean computed by pairwise summation; independent of thread partitioning.
double pairwise_mean(std::span<const double> values);

/// Sample standard deviation (n - 1 denominator) by two-pass pairwise sums.
double sample_stddev(std::span<const double> values);

/// Runs body(i) for i in [0, count) over `threads` workers (0 = hardware
/// concurrency). Work items must write only to their own output slots.
void parallel_for(Index count, unsigned threads, const std::function<void(Index)>& body);

}  // namespace atomicinv
