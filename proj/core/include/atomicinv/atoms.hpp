#pragma once

#include "atomicinv/model.hpp"
#include "atomicinv/types.hpp"

#include <string>
#include <string_view>

namespace atomicinv {

/// The four structural families and their atomic / dual norms:
///
///   family      atoms                 atomic norm   dual norm
///   kSparse     {+-e_i}               l1            l_inf
///   kLowRank    {u v^T : unit u, v}   nuclear       spectral
///   kSign       {+-1}^p               l_inf         l1
///   kOrthogonal O(m)                  spectral      nuclear
enum class AtomFamily { kSparse, kLowRank, kSign, kOrthogonal };

std::string_view to_string(AtomFamily family);
AtomFamily parse_atom_family(std::string_view name);

class AtomSet {
 public:
  /// Throws std::invalid_argument when the family and shape disagree
  /// (low-rank / orthogonal need a matrix shape, orthogonal a square one).
  AtomSet(AtomFamily family, Shape shape);

  static AtomSet sparse(Index p) { return {AtomFamily::kSparse, Shape::vector(p)}; }
  static AtomSet sign(Index p) { return {AtomFamily::kSign, Shape::vector(p)}; }
  static AtomSet low_rank(Index p1, Index p2) { return {AtomFamily::kLowRank, Shape::matrix(p1, p2)}; }
  static AtomSet orthogonal(Index m) { return {AtomFamily::kOrthogonal, Shape::matrix(m, m)}; }

  AtomFamily family() const { return family_; }
  const Shape& shape() const { return shape_; }
  Index dimension() const { return shape_.size(); }

  double norm(const Vector& x) const;
  double dual_norm(const Vector& x) const;

  /// argmin_z 0.5 ||z - x||^2 + t ||z||_A, t > 0.
  Vector prox(const Vector& x, double t) const;

  /// Euclidean projection onto {z : ||z||_A^* <= radius}.
  Vector project_dual_ball(const Vector& x, double radius) const;

  /// Euclidean projection onto {z : ||z||_A <= radius}.
  Vector project_norm_ball(const Vector& x, double radius) const;

  /// An atom a maximizing <x, a>, i.e. <x, a> = ||x||_A^*.
  Vector dual_maximizer(const Vector& x) const;

  /// Throws unless `truth` has the exact structure of this family (exact
  /// sparsity, numerical rank within 1e-8 sigma_1, +-1 entries, or
  /// orthogonality to 1e-10).
  void validate_truth(const GroundTruth& truth) const;

 private:
  void check(const Vector& x, const char* what) const;

  AtomFamily family_;
  Shape shape_;
};

double atomic_norm(const AtomSet& atoms, const Vector& x);
double dual_atomic_norm(const AtomSet& atoms, const Vector& x);
Vector prox_atomic_norm(const AtomSet& atoms, const Vector& x, double t);

/// Closed-form bound on the local asphericity ratio sup ||h||_A / ||h||_2
/// over the tangent cone: 2 sqrt(s) (sparse), 2 sqrt(2 r) (low rank),
/// 1 (sign, orthogonal).
double asphericity_upper_bound(const AtomSet& atoms, const GroundTruth& truth);
double asphericity_upper_bound(AtomFamily family, Index complexity);

}  // namespace atomicinv
