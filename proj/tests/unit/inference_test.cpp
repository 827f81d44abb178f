#include "atomicinv/inference.hpp"
#include "atomicinv/rng.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>

namespace atomicinv {
namespace {

struct Fixture {
  DesignOperator design;
  GroundTruth truth;
  ProblemInstance problem;
};

Fixture make_fixture(Index n, Index p, std::uint64_t seed, double sigma = 1.0) {
  Fixture f{gaussian_ensemble_design(n, p, seed), make_sparse_truth(p, 2, seed + 1), {}};
  f.problem = simulate_observation(f.design, f.truth, sigma, seed + 2);
  return f;
}

TEST(Debias, IdentityDesignGivesIdentityOmega) {
  const DesignOperator id = DesignOperator::identity(6);
  for (DebiasMode mode : {DebiasMode::kExactInverse, DebiasMode::kMinimizeEta}) {
    DebiasOptions opts;
    opts.mode = mode;
    const DebiasMatrix d = solve_debias_matrix(id, AtomSet::sparse(6), opts);
    EXPECT_TRUE(d.omega.isApprox(Matrix::Identity(6, 6), 1e-12));
    EXPECT_NEAR(d.eta, 0.0, 1e-12);
  }
}

TEST(Debias, WellConditionedDesignReachesInverse) {
  const Fixture f = make_fixture(200, 10, 3);
  const DebiasMatrix d = solve_debias_matrix(f.design, AtomSet::sparse(10));
  EXPECT_TRUE(d.used_inverse);
  EXPECT_LT(d.eta, 1e-10);
  const Matrix inv = f.design.gram().inverse();
  EXPECT_TRUE(d.omega.isApprox(inv, 1e-9));
}

TEST(Debias, HighDimensionalRowsSatisfyTheirResiduals) {
  const Fixture f = make_fixture(40, 60, 5);
  const AtomSet atoms = AtomSet::sparse(60);
  DebiasOptions opts;
  opts.threads = 2;
  const DebiasMatrix d = solve_debias_matrix(f.design, atoms, opts);
  EXPECT_FALSE(d.used_inverse);
  const Matrix g = f.design.gram();
  for (Index i = 0; i < 60; ++i) {
    const double resid = oracle::dual_norm(atoms, g * d.omega.row(i).transpose() - Vector::Unit(60, i));
    EXPECT_NEAR(resid, d.row_residuals(i), 1e-9);
    EXPECT_LE(resid, d.eta * (1 + 1e-5) + 1e-12);
  }
  // The trivial witness e_i has residual ||G e_i - e_i||_inf; bisection must improve on it.
  EXPECT_LT(d.eta, (g - Matrix::Identity(60, 60)).cwiseAbs().maxCoeff());
}

TEST(Debias, FixedEtaHonoursTarget) {
  const Fixture f = make_fixture(40, 60, 6);
  DebiasOptions opts;
  opts.mode = DebiasMode::kFixedEta;
  opts.eta_target = 0.5;
  const DebiasMatrix d = solve_debias_matrix(f.design, AtomSet::sparse(60), opts);
  ASSERT_TRUE(d.all_converged());
  EXPECT_LE(d.eta, 0.5 * (1 + 1e-5));
}

TEST(Debias, OptionValidation) {
  const Fixture f = make_fixture(10, 20, 7);
  DebiasOptions opts;
  opts.mode = DebiasMode::kFixedEta;
  EXPECT_THROW(solve_debias_matrix(f.design, AtomSet::sparse(20), opts), std::invalid_argument);
  EXPECT_THROW(exact_inverse_debias(f.design, AtomSet::sparse(20)), std::invalid_argument);
  EXPECT_THROW(solve_debias_matrix(f.design, AtomSet::sparse(21)), DimensionError);
  EXPECT_EQ(parse_debias_mode(to_string(DebiasMode::kMinimizeEta)), DebiasMode::kMinimizeEta);
}

TEST(DebiasedEstimate, ZeroOmegaAndNoiselessTruth) {
  const Fixture f = make_fixture(30, 8, 8);
  DebiasMatrix zero;
  zero.omega = Matrix::Zero(8, 8);
  const Vector m_hat = Vector::Constant(8, 0.3);
  EXPECT_EQ(debiased_estimate(m_hat, zero, f.problem), m_hat);

  const ProblemInstance noiseless = simulate_observation(f.design, f.truth, 0.0, 1);
  const DebiasMatrix d = exact_inverse_debias(f.design, AtomSet::sparse(8));
  EXPECT_LT((debiased_estimate(f.truth.parameter, d, noiseless) - f.truth.parameter).norm(), 1e-12);
}

TEST(DebiasedEstimate, ExactInverseGivesLeastSquaresForAnyEstimate) {
  Rng rng(9);
  for (int trial = 0; trial < 5; ++trial) {
    const Fixture f = make_fixture(50, 6, 10 + trial);
    const DebiasMatrix d = exact_inverse_debias(f.design, AtomSet::sparse(6));
    const Vector ls = f.design.matrix().colPivHouseholderQr().solve(f.problem.observation);
    const Vector m_hat = rng.normal_vector(6);
    EXPECT_LT((debiased_estimate(m_hat, d, f.problem) - ls).norm(), 1e-9);
  }
}

TEST(Normal, QuantileAndTails) {
  EXPECT_NEAR(normal_quantile(0.975), 1.959963984540054, 1e-12);
  EXPECT_NEAR(normal_cdf(1.959963984540054), 0.975, 1e-12);
  EXPECT_NEAR(two_sided_p_value(1.959964), 0.05, 1e-6);
  EXPECT_DOUBLE_EQ(two_sided_p_value(0.0), 1.0);
  EXPECT_GT(two_sided_p_value(1.0), two_sided_p_value(2.0));
  EXPECT_NEAR(two_sided_p_value(-3.0), two_sided_p_value(3.0), 0.0);
  EXPECT_THROW(normal_quantile(0.0), std::invalid_argument);
}

DebiasMatrix unit_variance_debias(Index n) {
  // X = sqrt(n) e_1 e_1^T-like design with Omega chosen so that variance_factor = 1.
  DebiasMatrix d;
  d.omega = Matrix::Identity(1, 1) / std::sqrt(static_cast<double>(n));
  return d;
}

TEST(ConfidenceInterval, HalfWidthArithmetic) {
  const Index n = 100;
  const DesignOperator x(Matrix::Ones(n, 1));
  const DebiasMatrix d = unit_variance_debias(n);
  const Contrast c = coordinate_contrast(1, 0);
  EXPECT_NEAR(variance_factor(d, x, c.v), 1.0, 1e-12);
  const InferenceResult r = confidence_interval(Vector::Constant(1, 2.0), d, x, 1.0, c, 0.05);
  EXPECT_NEAR(r.ci_high - r.point, 1.959963984540054 * 0.1, 1e-12);
  EXPECT_NEAR(r.point - r.ci_low, 1.959963984540054 * 0.1, 1e-12);
  EXPECT_FALSE(r.p_value.has_value());

  const InferenceResult degenerate = confidence_interval(Vector::Constant(1, 2.0), d, x, 1.0, c, 1.0);
  EXPECT_DOUBLE_EQ(degenerate.ci_low, 2.0);
  EXPECT_DOUBLE_EQ(degenerate.ci_high, 2.0);
}

TEST(ConfidenceInterval, WidthScalesAsInverseSqrtN) {
  for (Index n : {100, 400}) {
    const DesignOperator x(Matrix::Ones(n, 1));
    const DebiasMatrix d = unit_variance_debias(n);
    const InferenceResult r =
        confidence_interval(Vector::Zero(1), d, x, 1.0, coordinate_contrast(1, 0), 0.05);
    EXPECT_NEAR(r.ci_high - r.ci_low, 2 * 1.959963984540054 / std::sqrt(static_cast<double>(n)), 1e-12);
  }
}

TEST(ConfidenceInterval, ContrastAndAlphaValidation) {
  const Fixture f = make_fixture(30, 4, 2);
  const DebiasMatrix d = exact_inverse_debias(f.design, AtomSet::sparse(4));
  const Vector m = Vector::Zero(4);
  EXPECT_THROW(confidence_interval(m, d, f.design, 1.0, {"bad", Vector::Ones(4)}, 0.05), std::invalid_argument);
  EXPECT_THROW(confidence_interval(m, d, f.design, 1.0, coordinate_contrast(4, 0), 0.0), std::invalid_argument);
  EXPECT_THROW(confidence_interval(m, d, f.design, 1.0, coordinate_contrast(4, 0), 1.5), std::invalid_argument);
  const Contrast pair = pair_contrast(4, 1, 3);
  EXPECT_EQ(pair.id, "e1+e3");
  EXPECT_NEAR(pair.v.norm(), 1.0, 1e-15);
  const InferenceResult r = confidence_interval(m, d, f.design, 1.0, pair, 0.05, 0.0);
  EXPECT_LE(r.ci_low, r.point);
  EXPECT_GE(r.ci_high, r.point);
  ASSERT_TRUE(r.p_value.has_value());
  EXPECT_DOUBLE_EQ(*r.p_value, 1.0);
}

TEST(HypothesisTest, NullAtPointAndZeroVariance) {
  const Fixture f = make_fixture(30, 4, 2);
  const DebiasMatrix d = exact_inverse_debias(f.design, AtomSet::sparse(4));
  const Vector m = Vector::LinSpaced(4, 1, 4);
  const TestResult t = hypothesis_test(m, d, f.design, 1.0, Vector::Unit(4, 2), 3.0);
  EXPECT_NEAR(t.z, 0.0, 1e-12);
  EXPECT_NEAR(t.p_value, 1.0, 1e-12);
  DebiasMatrix zero;
  zero.omega = Matrix::Zero(4, 4);
  EXPECT_THROW(hypothesis_test(m, zero, f.design, 1.0, Vector::Unit(4, 2), 0.0), std::domain_error);
}

TEST(RemainderBound, ExactInverseAndPerfectEstimate) {
  const Fixture f = make_fixture(60, 8, 4);
  const DebiasMatrix d = exact_inverse_debias(f.design, AtomSet::sparse(8));
  EstimateResult est;
  est.estimate = Vector::Zero(8);
  est.lambda = 0.2;
  const RemainderReport a = debias_remainder_bound(est, d, 2.0, f.design, f.truth.parameter);
  ASSERT_TRUE(a.realized.has_value());
  EXPECT_LT(*a.realized, 1e-10);

  DebiasMatrix rough;
  rough.omega = Matrix::Identity(8, 8) * 0.5;
  rough.eta = 1.0;
  est.estimate = f.truth.parameter;
  const RemainderReport b = debias_remainder_bound(est, rough, 2.0, f.design, f.truth.parameter);
  EXPECT_DOUBLE_EQ(*b.realized, 0.0);
  EXPECT_DOUBLE_EQ(b.bound, 4.0 * 0.2 * 1.0);
  EXPECT_FALSE(debias_remainder_bound(est, rough, 2.0, f.design, std::nullopt).realized.has_value());
}

TEST(InferenceCsv, HasHeaderAndEmptyTestFields) {
  InferenceResult r;
  r.contrast_id = "e0";
  const std::string csv = inference_csv({r});
  EXPECT_EQ(csv.substr(0, csv.find('\r')), "contrast_id,point,ci_low,ci_high,z,p_value,variance_factor,eta,lambda");
  EXPECT_NE(csv.find("e0,0,0,0,,,0,0,0"), std::string::npos);
}

}  // namespace
}  // namespace atomicinv
