#include "atomicinv/geometry.hpp"
#include "atomicinv/rng.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

namespace atomicinv {
namespace {

McEstimate ball_width(Index p, Index samples, std::uint64_t seed, unsigned threads = 1) {
  return gaussian_width_mc(p, [](const Vector& g) { return g.norm(); }, samples, seed, threads);
}

TEST(ChiMean, AgreesWithRecursionOracle) {
  for (int p : {1, 2, 3, 8, 64, 500}) EXPECT_NEAR(chi_mean(p), oracle::chi_mean(p), 1e-10 * std::sqrt(p));
  EXPECT_NEAR(chi_mean(2), std::sqrt(M_PI / 2.0), 1e-14);
}

TEST(GaussianWidth, BallAndHalfNormal) {
  const McEstimate w = ball_width(2, 20000, 1);
  EXPECT_NEAR(w.estimate, std::sqrt(M_PI / 2.0), 3.0 * w.std_error);
  EXPECT_EQ(w.bias, BiasDirection::kNone);
  const McEstimate half = gaussian_width_mc(1, [](const Vector& g) { return std::abs(g(0)); }, 20000, 2);
  EXPECT_NEAR(half.estimate, std::sqrt(2.0 / M_PI), 3.0 * half.std_error);
}

TEST(GaussianWidth, SubspaceWidthIsChiMeanOfItsDimension) {
  // K = span(e_1..e_d) intersect the ball: sup <g, v> = ||g_{1:d}||.
  const McEstimate w = gaussian_width_mc(10, [](const Vector& g) { return g.head(3).norm(); }, 20000, 3);
  EXPECT_NEAR(w.estimate, oracle::chi_mean(3), 3.0 * w.std_error);
  EXPECT_LT(std::abs(w.estimate - std::sqrt(3.0)), 0.2);
}

TEST(GaussianWidth, DeterministicAcrossThreadCounts) {
  const McEstimate a = ball_width(5, 1000, 9, 1);
  const McEstimate b = ball_width(5, 1000, 9, 3);
  EXPECT_EQ(a.estimate, b.estimate);
  EXPECT_EQ(a.std_error, b.std_error);
}

TEST(GaussianWidth, StandardErrorShrinksLikeInverseRootSamples) {
  const McEstimate small = ball_width(4, 1000, 5);
  const McEstimate large = ball_width(4, 16000, 5);
  EXPECT_NEAR(small.std_error / large.std_error, 4.0, 0.6);
}

TEST(GaussianWidth, RejectsTooFewSamples) { EXPECT_THROW(ball_width(3, 50, 1), std::invalid_argument); }

TEST(ConeWidth, SparseSingleSupportAgainstEnumerationOracle) {
  // At s = 1 the exact inner sup is ||Pi_T(g)||; the sampled estimate is lower-biased
  // and must not exceed the exact projection width.
  const Index p = 16;
  const TangentCone cone(AtomSet::sparse(p), Vector::Unit(p, 3));
  ConeWidthOptions sampled;
  sampled.mc_samples = 200;
  sampled.restarts = 50;
  ConeWidthOptions exact = sampled;
  exact.method = ConeWidthMethod::kProjection;
  const McEstimate ws = tangent_cone_width(cone, sampled, 7);
  const McEstimate we = tangent_cone_width(cone, exact, 7);
  EXPECT_EQ(ws.bias, BiasDirection::kLower);
  EXPECT_EQ(we.bias, BiasDirection::kNone);
  EXPECT_LE(ws.estimate, we.estimate + 1e-6);
  EXPECT_LE(we.estimate, 3.0 * std::sqrt(std::log(16.0)));
  // The exact value, by direct enumeration: the cone at e_k is {h_k + ||h_{-k}||_1 <= 0}.
  Rng rng(11);
  for (int k = 0; k < 20; ++k) {
    const Vector g = rng.normal_vector(p);
    double best = 0.0;
    // Inner sup over the unit ball of the cone, by scanning the threshold t of the polar scale.
    auto dist = [&](double t) {
      Vector r = g;
      r(3) = g(3) - t;
      for (Index i = 0; i < p; ++i) {
        if (i != 3) r(i) = std::copysign(std::max(std::abs(g(i)) - t, 0.0), g(i));
      }
      return r.squaredNorm();
    };
    const double t = oracle::scalar_argmin(dist, 0.0, g.cwiseAbs().maxCoeff() + std::abs(g(3)) + 1.0);
    best = std::sqrt(dist(t));
    EXPECT_NEAR(cone.ball_support(g), best, 1e-5);
    EXPECT_LE(sampled_cone_support(cone, g, 20, 20, rng), best + 1e-6);
  }
}

TEST(ConeWidth, SignWidthOfOrderRootP) {
  const TangentCone cone(AtomSet::sign(8), make_sign_truth(8, 2).parameter);
  ConeWidthOptions opts;
  opts.method = ConeWidthMethod::kProjection;
  const McEstimate w = tangent_cone_width(cone, opts, 3);
  // The cone is an orthant: E ||g_-||... = chi-like mean with p/2 effective coordinates.
  EXPECT_GT(w.estimate, 0.5 * std::sqrt(8.0 / 2.0));
  EXPECT_LT(w.estimate, std::sqrt(8.0));
}

TEST(ConeWidth, OrthogonalConeBelowFullBall) {
  const TangentCone cone(AtomSet::orthogonal(2), make_orthogonal_truth(2, 5).parameter);
  ConeWidthOptions opts;
  opts.mc_samples = 300;
  opts.restarts = 50;
  const McEstimate w = tangent_cone_width(cone, opts, 4);
  EXPECT_LE(w.estimate, std::sqrt(4.0) + 3.0 * w.std_error);
  ConeWidthOptions exact = opts;
  exact.method = ConeWidthMethod::kProjection;
  const McEstimate we = tangent_cone_width(cone, exact, 4);
  EXPECT_LE(w.estimate, we.estimate + 1e-6);
  EXPECT_LE(we.estimate, chi_mean(4) + 3.0 * we.std_error);
}

TEST(Sudakov, DiskPackingAndSingleton) {
  std::vector<Vector> pts;
  Rng rng(1);
  for (int i = 0; i < 2000; ++i) pts.push_back(rng.unit_ball(2));
  // A maximal 1-separated subset of dense disk samples: two unit disks cannot cover the disk.
  EXPECT_GE(greedy_packing(pts, 1.0), 3);
  EXPECT_EQ(greedy_packing(pts, 1e-9), 2000);
  const SudakovEstimate e = sudakov_estimate([](Rng& r) { return r.unit_ball(2); }, {0.5}, 1000, 3);
  ASSERT_EQ(e.packing.size(), 1u);
  EXPECT_GE(e.packing[0], 3);
  EXPECT_NEAR(e.value, 0.5 * std::sqrt(std::log(static_cast<double>(e.packing[0]))), 1e-15);
  EXPECT_DOUBLE_EQ(e.epsilon, 0.5);

  const SudakovEstimate single = sudakov_estimate([](Rng&) { return Vector::Zero(3); }, default_epsilon_grid(), 1000, 3);
  EXPECT_DOUBLE_EQ(single.value, 0.0);
  EXPECT_THROW(sudakov_estimate([](Rng& r) { return r.unit_ball(2); }, {}, 1000, 1), std::invalid_argument);
  EXPECT_THROW(sudakov_estimate([](Rng& r) { return r.unit_ball(2); }, {0.5}, 999, 1), std::invalid_argument);
}

TEST(Sudakov, SanityOrderingAgainstWidth) {
  const TangentCone cone(AtomSet::sparse(8), make_sparse_truth(8, 2, 1).parameter);
  const SudakovEstimate e = sudakov_estimate([&](Rng& r) { return sample_cone_ball_point(cone, r); },
                                             default_epsilon_grid(), 1000, 2);
  ConeWidthOptions opts;
  opts.method = ConeWidthMethod::kProjection;
  const McEstimate w = tangent_cone_width(cone, opts, 2);
  EXPECT_GT(e.value, 0.0);
  EXPECT_LE(e.value, 10.0 * w.estimate);
}

TEST(VolumeRatio, FullSpaceAndHalfPlane) {
  const VolumeEstimate full = volume_ratio_mc([](const Vector&) { return true; }, 5, 2000, 1);
  EXPECT_DOUBLE_EQ(full.value, std::sqrt(5.0));
  const VolumeEstimate half = volume_ratio_mc([](const Vector& h) { return h(0) <= 0.0; }, 2, 200000, 2);
  EXPECT_NEAR(half.value, 1.0, 3.0 * half.std_error);
  EXPECT_THROW(volume_ratio_mc([](const Vector&) { return true; }, 9, 1000, 1), std::invalid_argument);
}

TEST(Isometry, IdentityAndHomogeneity) {
  const TangentCone cone(AtomSet::sparse(6), make_sparse_truth(6, 2, 1).parameter);
  const IsometryEstimate id = local_isometry_constants(DesignOperator::identity(6), cone, 50, 2, 1);
  EXPECT_NEAR(id.phi, 1.0, 1e-12);
  EXPECT_NEAR(id.psi, 1.0, 1e-12);
  const IsometryEstimate twice =
      local_isometry_constants(DesignOperator(2.0 * Matrix::Identity(6, 6)), cone, 50, 2, 1);
  EXPECT_NEAR(twice.phi, 2.0, 1e-12);
  EXPECT_NEAR(twice.psi, 2.0, 1e-12);

  const DesignOperator x = gaussian_ensemble_design(30, 6, 4);
  const IsometryEstimate a = local_isometry_constants(x, cone, 100, 3, 5);
  const IsometryEstimate b = local_isometry_constants(DesignOperator(3.0 * x.matrix()), cone, 100, 3, 5);
  EXPECT_LE(a.phi, a.psi);
  EXPECT_NEAR(b.phi, 3.0 * a.phi, 1e-9);
  EXPECT_NEAR(b.psi, 3.0 * a.psi, 1e-9);
}

TEST(Asphericity, RunningMaxWithinClosedFormBound) {
  for (const auto& [atoms, truth] :
       std::vector<std::pair<AtomSet, GroundTruth>>{{AtomSet::sparse(10), make_sparse_truth(10, 2, 1)},
                                                    {AtomSet::low_rank(4, 4), make_low_rank_truth(4, 4, 1, 2)},
                                                    {AtomSet::sign(6), make_sign_truth(6, 3)},
                                                    {AtomSet::orthogonal(3), make_orthogonal_truth(3, 4)}}) {
    const TangentCone cone(atoms, truth.parameter);
    const McEstimate gamma = empirical_asphericity(cone, 500, 6);
    EXPECT_EQ(gamma.bias, BiasDirection::kLower);
    EXPECT_GT(gamma.estimate, 0.0);
    EXPECT_LE(gamma.estimate, asphericity_upper_bound(atoms, truth) * (1 + 1e-6)) << to_string(atoms.family());
    Rng rng(7);
    for (int k = 0; k < 100; ++k) {
      const Vector h = cone.sample_direction(rng);
      EXPECT_LE(oracle::atomic_norm(atoms, h), gamma.estimate * (1 + 1e-9) + 1e-12);
    }
  }
}

TEST(ImageAtomWidth, IdentitySparseIsExpectedMax) {
  const McEstimate w = image_atom_width(DesignOperator::identity(1), AtomSet::sparse(1), 20000, 1);
  EXPECT_NEAR(w.estimate, std::sqrt(2.0 / M_PI), 3.0 * w.std_error);
}

ConeDiagnostics small_diagnostics(std::uint64_t seed) {
  const TangentCone cone(AtomSet::sparse(6), make_sparse_truth(6, 1, seed).parameter);
  DiagnosticsOptions opts;
  opts.width_samples = 200;
  opts.width_restarts = 40;
  opts.atom_width_samples = 500;
  opts.volume_samples = 20000;
  opts.isometry_samples = 100;
  opts.asphericity_samples = 500;
  return diagnose_cone(gaussian_ensemble_design(60, 6, seed), cone, opts, seed);
}

TEST(Diagnostics, PopulatedAndDeterministic) {
  const ConeDiagnostics a = small_diagnostics(3);
  const ConeDiagnostics b = small_diagnostics(3);
  EXPECT_EQ(a.width.estimate, b.width.estimate);
  EXPECT_EQ(a.isometry.phi, b.isometry.phi);
  EXPECT_EQ(a.n, 60);
  EXPECT_EQ(a.p, 6);
  ASSERT_TRUE(a.volume.has_value());
  EXPECT_LE(a.volume->value, a.width.estimate + 3.0 * std::hypot(a.volume->std_error, a.width.std_error) + 0.5);
  EXPECT_DOUBLE_EQ(a.gamma_bound, 2.0);
}

TEST(EvaluateBounds, ArithmeticAndScaling) {
  const ConeDiagnostics d = small_diagnostics(4);
  const BoundReport r1 = evaluate_bounds(d, 1.0, 100);
  const BoundReport r2 = evaluate_bounds(d, 1.0, 200);
  EXPECT_NEAR(r1.upper / r2.upper, std::sqrt(2.0), 1e-12);
  EXPECT_NEAR(r1.upper, 2.0 / 0.25 * d.gamma.estimate * d.image_width.estimate / 10.0, 1e-12);
  EXPECT_NEAR(r1.min_n, 4.0 * std::pow(d.width.estimate + d.delta, 2) / 0.25, 1e-9);
  const BoundReport zero = evaluate_bounds(d, 0.0, 100);
  EXPECT_DOUBLE_EQ(zero.upper, 0.0);
  EXPECT_DOUBLE_EQ(zero.lower, 0.0);
  ConeDiagnostics missing = d;
  missing.image_width.samples = 0;
  EXPECT_THROW(evaluate_bounds(missing, 1.0, 100), std::invalid_argument);
}

TEST(EvaluateBounds, SparseUpperBoundTracksRootN) {
  const Index p = 64;
  const TangentCone cone(AtomSet::sparse(p), make_sparse_truth(p, 2, 1).parameter);
  std::vector<double> logn;
  std::vector<double> logb;
  for (Index n = 256; n <= 4096; n *= 2) {
    DiagnosticsOptions opts;
    opts.width_samples = 100;
    opts.width_method = ConeWidthMethod::kProjection;
    opts.atom_width_samples = 300;
    opts.sudakov_budget = 1000;
    opts.volume_samples = 0;
    opts.isometry_samples = 20;
    opts.isometry_restarts = 1;
    opts.asphericity_samples = 300;
    const ConeDiagnostics d = diagnose_cone(gaussian_ensemble_design(n, p, 10 + static_cast<std::uint64_t>(n)), cone,
                                            opts, 5);
    logn.push_back(std::log(static_cast<double>(n)));
    logb.push_back(std::log(evaluate_bounds(d, 1.0, n).upper));
  }
  const double mx = std::accumulate(logn.begin(), logn.end(), 0.0) / logn.size();
  const double my = std::accumulate(logb.begin(), logb.end(), 0.0) / logb.size();
  double sxy = 0.0;
  double sxx = 0.0;
  for (std::size_t i = 0; i < logn.size(); ++i) {
    sxy += (logn[i] - mx) * (logb[i] - my);
    sxx += (logn[i] - mx) * (logn[i] - mx);
  }
  EXPECT_NEAR(sxy / sxx, -0.5, 0.05);
}

}  // namespace
}  // namespace atomicinv
