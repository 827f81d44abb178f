#pragma once

#include "atomicinv/atoms.hpp"
#include "atomicinv/rng.hpp"

#include <cstdint>
#include <vector>

namespace atomicinv {

/// Step and slack of the numeric descent test ||M + t h||_A <= ||M||_A + slack.
inline constexpr double kDescentStep = 1e-4;
inline constexpr double kDescentSlack = 1e-8;

/// Descent (tangent) cone T_A(M) = cone{h : ||M + h||_A <= ||M||_A} at an
/// exactly structured anchor M.
///
/// Membership is decided by a numeric descent test on the unit-normalized
/// direction. Sampling draws family-specific candidates and rejection-resamples
/// until the descent test passes. `project` is the exact Euclidean projection,
/// obtained from the polar cone generated by the subdifferential of the
/// atomic norm at M.
class TangentCone {
 public:
  /// Throws std::invalid_argument when the anchor lacks exact structure.
  TangentCone(AtomSet atoms, Vector anchor);

  const AtomSet& atoms() const { return atoms_; }
  const Vector& anchor() const { return anchor_; }
  Index dimension() const { return anchor_.size(); }
  /// Support size (sparse) or rank (low rank); dimension otherwise.
  Index structure_size() const { return structure_size_; }

  bool contains(const Vector& h, double step = kDescentStep, double slack = kDescentSlack) const;

  /// Unit-norm direction inside the cone.
  Vector sample_direction(Rng& rng) const;

  /// Euclidean projection onto the (closed) cone.
  Vector project(const Vector& x) const;

  /// sup { <g, h> : h in T, ||h||_2 <= 1 } = ||project(g)||_2.
  double ball_support(const Vector& g) const { return project(g).norm(); }

 private:
  Vector candidate(Rng& rng) const;

  AtomSet atoms_;
  Vector anchor_;
  double anchor_norm_ = 0.0;
  Index structure_size_ = 0;

  // kSparse / kSign
  std::vector<Index> support_;
  std::vector<Index> off_support_;
  Vector signs_;
  // kLowRank: left / right singular factors of the anchor; kOrthogonal: u_ holds M.
  Matrix u_;
  Matrix v_;
};

/// Unit direction in the cone; deterministic given `seed`.
Vector sample_tangent_cone_direction(const TangentCone& cone, std::uint64_t seed);

/// Minimizer over t >= 0 of
///   ||g_T - t c||^2 + sum_j (sigma_j - t)_+^2,
/// where inner = <g, c> and center_sq = ||c||^2. This is the scale of the
/// projection of g onto the polar of an l1- or nuclear-norm descent cone.
double polar_scale(double inner, double center_sq, std::vector<double> sigma);

}  // namespace atomicinv
