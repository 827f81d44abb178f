#pragma once

#include "atomicinv/atoms.hpp"
#include "atomicinv/model.hpp"
#include "atomicinv/solver.hpp"

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace atomicinv {

enum class DebiasMode {
  /// Omega = (X^T X)^{-1}; requires a nonsingular Gram matrix.
  kExactInverse,
  /// Every row satisfies ||X^T X omega_i - e_i||_A^* <= eta_target.
  kFixedEta,
  /// Smallest eta reachable row by row (bisection over feasibility solves).
  kMinimizeEta,
};

std::string_view to_string(DebiasMode mode);
DebiasMode parse_debias_mode(std::string_view name);

struct DebiasOptions {
  DebiasMode mode = DebiasMode::kMinimizeEta;
  std::optional<double> eta_target;
  /// Iteration budget of one feasibility solve inside the bisection.
  int feasibility_iterations = 2000;
  /// Iteration budget and tolerances of the final per-row solve.
  SolverConfig solver{.max_iterations = 20000, .eps_primal = 1e-8, .eps_dual = 1e-8};
  /// Bisection stops once the bracket is below this fraction of its initial width.
  double bisection_tolerance = 1e-3;
  unsigned threads = 1;
};

struct DebiasMatrix {
  Matrix omega;
  /// max_i of the achieved row residuals.
  double eta = 0.0;
  /// ||X^T X omega_i - e_i||_A^* per row.
  Vector row_residuals;
  std::vector<bool> row_converged;
  DebiasMode mode = DebiasMode::kMinimizeEta;
  /// Minimize-eta mode took the closed form (X^T X)^{-1} because X^T X is
  /// nonsingular, which attains eta = 0 up to rounding.
  bool used_inverse = false;

  bool all_converged() const;
};

/// Solves the de-biasing program row by row. Each row minimizes the variance
/// proxy omega^T X^T X omega over the dual-ball constraint, starting from the
/// identity witness omega = e_i. Throws std::invalid_argument on bad options
/// and DimensionError on shape mismatch.
DebiasMatrix solve_debias_matrix(const DesignOperator& design, const AtomSet& atoms, const DebiasOptions& options = {});

/// Omega = (X^T X)^{-1}. Throws std::invalid_argument when X^T X is singular.
DebiasMatrix exact_inverse_debias(const DesignOperator& design, const AtomSet& atoms);

/// M_tilde = M_hat + Omega X^T (Y - X M_hat).
Vector debiased_estimate(const Vector& estimate, const DebiasMatrix& debias, const ProblemInstance& problem);
Vector debiased_estimate(const EstimateResult& estimate, const DebiasMatrix& debias, const ProblemInstance& problem);

/// Standard normal CDF and quantile.
double normal_cdf(double x);
double normal_quantile(double probability);

/// Two-sided p-value 2 (1 - Phi(|z|)).
double two_sided_p_value(double z);

struct Contrast {
  std::string id;
  Vector v;
};

/// e_i with id "e<i>".
Contrast coordinate_contrast(Index p, Index i);
/// (e_a + e_b) / sqrt(2) with id "e<a>+e<b>".
Contrast pair_contrast(Index p, Index a, Index b);

/// v^T Omega X^T X Omega^T v = ||X Omega^T v||_2^2.
double variance_factor(const DebiasMatrix& debias, const DesignOperator& design, const Vector& v);

struct InferenceResult {
  std::string contrast_id;
  Vector contrast;
  double point = 0.0;
  double variance_factor = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  double alpha = 0.05;
  std::optional<double> null_value;
  std::optional<double> z_statistic;
  std::optional<double> p_value;
  double eta = 0.0;
  double lambda = 0.0;
  /// Non-fatal notes, e.g. a contrast with more than 10 nonzeros.
  std::vector<std::string> warnings;

  bool covers(double value) const { return ci_low <= value && value <= ci_high; }
};

struct TestResult {
  double z = 0.0;
  double p_value = 1.0;
};

/// <v, M_tilde> +- Phi^{-1}(1 - alpha/2) sigma sqrt(variance_factor / n) for
/// alpha in (0, 1]; alpha = 1 yields a zero-width interval. Throws unless
/// ||v||_2 = 1 within 1e-8. Fills the test fields when `null_value` is set.
InferenceResult confidence_interval(const Vector& debiased, const DebiasMatrix& debias, const DesignOperator& design,
                                    double sigma, const Contrast& contrast, double alpha,
                                    std::optional<double> null_value = std::nullopt);

/// z = sqrt(n) (<v, M_tilde> - v0) / (sigma sqrt(variance_factor)).
/// Throws std::domain_error when the variance factor is zero.
TestResult hypothesis_test(const Vector& debiased, const DebiasMatrix& debias, const DesignOperator& design,
                           double sigma, const Vector& v, double null_value);

struct RemainderReport {
  /// gamma^2 * lambda * eta.
  double bound = 0.0;
  /// ||(Omega X^T X - I)(M - M_hat)||_inf when the truth is known.
  std::optional<double> realized;
};

RemainderReport debias_remainder_bound(const EstimateResult& estimate, const DebiasMatrix& debias, double gamma,
                                       const DesignOperator& design, const std::optional<Vector>& truth);

/// CSV with columns contrast_id, point, ci_low, ci_high, z, p_value,
/// variance_factor, eta, lambda. Missing test fields are left empty.
std::string inference_csv(const std::vector<InferenceResult>& results);

}  // namespace atomicinv
