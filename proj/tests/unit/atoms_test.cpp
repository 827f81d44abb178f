#include "atomicinv/atoms.hpp"
#include "atomicinv/linalg.hpp"
#include "atomicinv/rng.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

namespace atomicinv {
namespace {

Vector diag2(double a, double b) {
  Matrix m = Matrix::Zero(2, 2);
  m(0, 0) = a;
  m(1, 1) = b;
  return vec(m);
}

TEST(AtomicNorm, Examples) {
  const Vector x{{1.0, -2.0, 3.0}};
  EXPECT_DOUBLE_EQ(atomic_norm(AtomSet::sparse(3), x), 6.0);
  EXPECT_NEAR(atomic_norm(AtomSet::low_rank(2, 2), diag2(3, 4)), 7.0, 1e-12);
  EXPECT_NEAR(atomic_norm(AtomSet::orthogonal(3), vec(Matrix::Identity(3, 3))), 1.0, 1e-12);
  EXPECT_DOUBLE_EQ(atomic_norm(AtomSet::sign(3), x), 3.0);
}

TEST(DualNorm, Examples) {
  const Vector x{{1.0, -2.0, 3.0}};
  EXPECT_DOUBLE_EQ(dual_atomic_norm(AtomSet::sparse(3), x), 3.0);
  EXPECT_DOUBLE_EQ(dual_atomic_norm(AtomSet::sign(3), x), 6.0);
  EXPECT_NEAR(dual_atomic_norm(AtomSet::low_rank(2, 2), diag2(3, 4)), 4.0, 1e-12);
  EXPECT_NEAR(dual_atomic_norm(AtomSet::orthogonal(2), diag2(3, -4)), 7.0, 1e-12);
}

TEST(Prox, Examples) {
  EXPECT_TRUE(prox_atomic_norm(AtomSet::sparse(2), Vector{{3.0, -1.0}}, 2.0).isApprox(Vector{{1.0, 0.0}}));
  EXPECT_LT((prox_atomic_norm(AtomSet::low_rank(2, 2), diag2(3, 1), 2.0) - diag2(1, 0)).norm(), 1e-12);
  EXPECT_LT((prox_atomic_norm(AtomSet::sign(2), Vector{{2.0, 0.5}}, 1.0) - Vector{{1.0, 0.5}}).norm(), 1e-12);
}

TEST(Prox, SignExampleAgreesWithScalarBruteForce) {
  // Coordinate 0 is clipped at some level c and coordinate 1 moves only if |0.5| > c,
  // so the 2-d problem reduces to a scalar search over the common level c.
  const Vector x{{2.0, 0.5}};
  const double t = 1.0;
  auto objective = [&](double c) {
    const Vector z = x.cwiseMax(-c).cwiseMin(c);
    return 0.5 * (z - x).squaredNorm() + t * z.lpNorm<Eigen::Infinity>();
  };
  const double c = oracle::scalar_argmin(objective, 0.0, 3.0);
  const Vector brute = x.cwiseMax(-c).cwiseMin(c);
  const Vector z = AtomSet::sign(2).prox(x, t);
  EXPECT_LT((z - brute).norm(), 1e-6);
}

TEST(Prox, OrthogonalFamilyClipsSingularValues) {
  Rng rng(5);
  const AtomSet atoms = AtomSet::orthogonal(3);
  const Vector x = rng.normal_vector(9) * 2.0;
  const Vector z = atoms.prox(x, 0.7);
  // Spectral-norm prox = x - projection onto the nuclear ball of radius t.
  const Vector expected = x - atoms.project_dual_ball(x, 0.7);
  EXPECT_LT((z - expected).norm(), 1e-10);
  EXPECT_NEAR(oracle::dual_norm(atoms, x - z), 0.7, 1e-9);
}

TEST(Projections, DualBallMatchesBruteForceOnSparse) {
  const AtomSet atoms = AtomSet::sparse(3);
  const Vector x{{2.0, -0.2, -5.0}};
  EXPECT_TRUE(atoms.project_dual_ball(x, 1.0).isApprox(Vector{{1.0, -0.2, -1.0}}));
}

TEST(Projections, L1BallAgreesWithScalarOracle) {
  Rng rng(8);
  for (int trial = 0; trial < 50; ++trial) {
    const Vector x = rng.normal_vector(7) * 3.0;
    const double radius = 0.5 + rng.uniform() * 2.0;
    const Vector z = project_l1_ball(x, radius);
    EXPECT_LE(z.lpNorm<1>(), radius * (1 + 1e-12));
    // Oracle: the threshold tau solving sum (|x| - tau)_+ = radius.
    auto gap = [&](double tau) {
      const double s = (x.array().abs() - tau).max(0.0).sum() - radius;
      return s * s;
    };
    const double tau = x.lpNorm<1>() <= radius ? 0.0 : oracle::scalar_argmin(gap, 0.0, x.cwiseAbs().maxCoeff());
    EXPECT_LT((z - soft_threshold(x, tau)).norm(), 1e-6);
  }
}

TEST(Projections, NormBallIsFeasibleAndIdempotent) {
  Rng rng(9);
  for (AtomSet atoms : {AtomSet::sparse(6), AtomSet::sign(6), AtomSet::low_rank(3, 2), AtomSet::orthogonal(2)}) {
    const Vector x = rng.normal_vector(atoms.dimension()) * 4.0;
    const Vector z = atoms.project_norm_ball(x, 1.3);
    EXPECT_LE(oracle::atomic_norm(atoms, z), 1.3 * (1 + 1e-9));
    EXPECT_LT((atoms.project_norm_ball(z, 1.3) - z).norm(), 1e-9);
    const Vector y = atoms.project_dual_ball(x, 0.8);
    EXPECT_LE(oracle::dual_norm(atoms, y), 0.8 * (1 + 1e-9));
  }
}

TEST(DualMaximizer, IsAnAtomAttainingTheDualNorm) {
  Rng rng(12);
  for (AtomSet atoms : {AtomSet::sparse(5), AtomSet::sign(5), AtomSet::low_rank(3, 4), AtomSet::orthogonal(3)}) {
    const Vector x = rng.normal_vector(atoms.dimension());
    const Vector a = atoms.dual_maximizer(x);
    EXPECT_NEAR(x.dot(a), oracle::dual_norm(atoms, x), 1e-10);
    EXPECT_NEAR(oracle::atomic_norm(atoms, a), 1.0, 1e-10);
  }
}

TEST(AtomSet, ShapeValidation) {
  EXPECT_THROW(AtomSet(AtomFamily::kLowRank, Shape::vector(4)), std::invalid_argument);
  EXPECT_THROW(AtomSet(AtomFamily::kOrthogonal, Shape::matrix(2, 3)), std::invalid_argument);
  EXPECT_THROW(AtomSet::sparse(3).norm(Vector::Zero(4)), DimensionError);
  EXPECT_THROW(AtomSet::sparse(3).prox(Vector::Zero(3), 0.0), std::invalid_argument);
}

TEST(AtomSet, FamilyNamesRoundTrip) {
  for (AtomFamily f : {AtomFamily::kSparse, AtomFamily::kLowRank, AtomFamily::kSign, AtomFamily::kOrthogonal}) {
    EXPECT_EQ(parse_atom_family(to_string(f)), f);
  }
  EXPECT_THROW(parse_atom_family("dense"), std::invalid_argument);
}

TEST(AtomSet, ValidateTruthRejectsInexactStructure) {
  const AtomSet sign = AtomSet::sign(3);
  EXPECT_NO_THROW(sign.validate_truth({Vector{{1.0, -1.0, 1.0}}, 3}));
  EXPECT_THROW(sign.validate_truth({Vector{{1.0, -0.5, 1.0}}, 3}), std::invalid_argument);
  const AtomSet orth = AtomSet::orthogonal(2);
  EXPECT_THROW(orth.validate_truth({diag2(1.0, 1.1), 2}), std::invalid_argument);
}

TEST(Asphericity, ClosedFormBounds) {
  EXPECT_DOUBLE_EQ(asphericity_upper_bound(AtomFamily::kSparse, 4), 4.0);
  EXPECT_DOUBLE_EQ(asphericity_upper_bound(AtomFamily::kLowRank, 2), 4.0);
  EXPECT_DOUBLE_EQ(asphericity_upper_bound(AtomFamily::kSign, 7), 1.0);
  EXPECT_DOUBLE_EQ(asphericity_upper_bound(AtomFamily::kOrthogonal, 3), 1.0);
}

TEST(Linalg, SortedSvdIsDescendingAndReconstructs) {
  Rng rng(1);
  const Matrix m = rng.normal_matrix(4, 3);
  const SortedSvd svd = sorted_svd(m);
  EXPECT_TRUE(std::is_sorted(svd.s.data(), svd.s.data() + svd.s.size(), std::greater<>()));
  EXPECT_TRUE(svd.reconstruct().isApprox(m, 1e-12));
}

TEST(Linalg, PolarFactorIsOrthogonal) {
  Rng rng(2);
  const Matrix q = polar_factor(rng.normal_matrix(4, 4));
  EXPECT_TRUE((q.transpose() * q).isApprox(Matrix::Identity(4, 4), 1e-12));
}

TEST(Linalg, PairwiseMeanIsExactOnSmallIntegers) {
  std::vector<double> v(1001);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = static_cast<double>(i);
  EXPECT_DOUBLE_EQ(pairwise_mean(v), 500.0);
  EXPECT_NEAR(sample_stddev(std::vector<double>{1.0, 2.0, 3.0, 4.0}), std::sqrt(5.0 / 3.0), 1e-14);
}

TEST(Linalg, ParallelForCoversEveryIndexOnce) {
  std::vector<int> hits(257, 0);
  parallel_for(257, 4, [&](Index i) { hits[static_cast<std::size_t>(i)] += 1; });
  EXPECT_TRUE(std::all_of(hits.begin(), hits.end(), [](int h) { return h == 1; }));
}

}  // namespace
}  // namespace atomicinv
