#pragma once

#include "atomicinv/atoms.hpp"
#include "atomicinv/model.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace atomicinv {

struct SolverConfig {
  int max_iterations = 20000;
  /// Relative primal / dual residual tolerances.
  double eps_primal = 1e-7;
  double eps_dual = 1e-7;
  double rho = 1.0;
  bool adaptive_rho = true;
  /// Over-relaxation factor in [1, 2).
  double relaxation = 1.8;
  /// Anderson acceleration memory on the ADMM fixed-point map; 0 disables it.
  int anderson_memory = 10;
  /// Keep the per-iteration merit in the result: the fixed-point residual
  /// ||T(w) - w|| of one sweep, which bundles the primal residuals with the
  /// rho-scaled change of (Z, R). Non-increasing for plain ADMM at fixed rho.
  bool record_history = false;

  /// Throws std::invalid_argument on out-of-range fields.
  void validate() const;
};

struct EstimateResult {
  Vector estimate;
  double lambda = 0.0;
  /// ||X^T (Y - X estimate)||_A^*.
  double residual_dual_norm = 0.0;
  double atomic_norm_value = 0.0;
  int iterations = 0;
  bool converged = false;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  double final_rho = 0.0;
  /// Set for lambda == 0 with a singular Gram matrix: the constraint pins an
  /// affine subspace and any minimizer over it is returned.
  bool rank_deficient = false;
  std::vector<double> merit_history;
};

/// Minimizes ||M||_A subject to ||X^T (Y - X M)||_A^* <= lambda.
///
/// ADMM on the split M = Z, X^T X M + R = X^T Y with R in the lambda-scaled
/// dual ball: the M step is a fixed linear solve, the Z step a prox of the
/// atomic norm and the R step a dual-ball projection. Starts from M = 0.
/// The sweep is Anderson-accelerated as a fixed-point map; an extrapolated
/// point whose merit exceeds 1.1x the best so far is replaced by a plain sweep
/// from the best point. Adaptive rho widens its update interval whenever the
/// balancing direction reverses.
/// The feasible set is never empty for lambda >= 0 (the least-squares
/// solutions satisfy the constraint with equality at lambda = 0), so the only
/// failure mode is reaching max_iterations, reported via `converged`.
EstimateResult solve_constrained(const ProblemInstance& problem, const AtomSet& atoms, double lambda,
                                 const SolverConfig& config = {});

struct LambdaOptions {
  Index mc_samples = 500;
  /// Defaults to sqrt(2 log p).
  std::optional<double> delta;
  std::uint64_t seed = 0;
  unsigned threads = 1;
};

struct LambdaEstimate {
  double lambda = 0.0;
  /// Monte-Carlo Gaussian width of the image atom set X(A).
  double image_width = 0.0;
  double image_width_stderr = 0.0;
  double max_atom_image_norm = 0.0;
  double delta = 0.0;
  Index mc_samples = 0;
};

/// lambda = sigma / sqrt(n) * (w(X A) + delta * sup_{v in A} ||X v||_2).
LambdaEstimate compute_lambda(const DesignOperator& design, const AtomSet& atoms, double sigma,
                              const LambdaOptions& options = {});

/// Default delta = sqrt(2 log p) (taken as 0 at p = 1).
double default_delta(Index p);

/// sup_{v in A} ||X v||_2: exact for sparse atoms and for sign atoms with
/// p <= 20 (Gray-code enumeration); multistart ascent otherwise.
double max_atom_image_norm(const DesignOperator& design, const AtomSet& atoms, std::uint64_t seed = 0);

struct FeasibilityReport {
  double residual_dual_norm = 0.0;
  double lambda = 0.0;
  bool feasible = false;
  /// ||X^T X (candidate - truth)||_A^* when the problem carries a truth.
  std::optional<double> truth_gap;
  /// truth_gap <= 2 lambda (the cone-membership surrogate).
  std::optional<bool> truth_gap_within_2lambda;
};

/// Feasibility uses the same slack as the solver: lambda (1 + 1e-5) plus
/// 1e-9 (1 + ||X^T Y||_A^*) absolute.
FeasibilityReport verify_feasibility(const ProblemInstance& problem, const AtomSet& atoms,
                                     const Vector& candidate, double lambda);

}  // namespace atomicinv
