#include "atomicinv/inference.hpp"

#include "atomicinv/csv.hpp"
#include "atomicinv/linalg.hpp"

#include <boost/math/special_functions/erf.hpp>

#include <algorithm>
#include <cmath>

namespace atomicinv {

std::string_view to_string(DebiasMode mode) {
  switch (mode) {
    case DebiasMode::kExactInverse: return "exact";
    case DebiasMode::kFixedEta: return "fixed";
    case DebiasMode::kMinimizeEta: return "minimize";
  }
  return "minimize";
}

DebiasMode parse_debias_mode(std::string_view name) {
  if (name == "exact" || name == "exact-inverse") return DebiasMode::kExactInverse;
  if (name == "fixed" || name == "fixed-eta") return DebiasMode::kFixedEta;
  if (name == "minimize" || name == "minimize-eta") return DebiasMode::kMinimizeEta;
  throw std::invalid_argument("unknown debias mode '" + std::string(name) + "'");
}

bool DebiasMatrix::all_converged() const {
  return std::all_of(row_converged.begin(), row_converged.end(), [](bool b) { return b; });
}

namespace {

constexpr double kRowSlack = 1e-5;

bool nonsingular(const Matrix& gram) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(gram, Eigen::EigenvaluesOnly);
  const double top = eig.eigenvalues().maxCoeff();
  return top > 0.0 && eig.eigenvalues().minCoeff() > 1e-10 * top;
}

void fill_residuals(DebiasMatrix& out, const Matrix& gram, const AtomSet& atoms) {
  const Index p = gram.rows();
  out.row_residuals.resize(p);
  for (Index i = 0; i < p; ++i) {
    Vector r = gram * out.omega.row(i).transpose();
    r(i) -= 1.0;
    out.row_residuals(i) = atoms.dual_norm(r);
  }
  out.eta = p > 0 ? out.row_residuals.maxCoeff() : 0.0;
}

// Row subproblem: minimize 0.5 w^T (G + eps I) w subject to ||G w - e_i||^* <= eta,
// by ADMM on the split r = G w - e_i. `factor` holds G + eps I + rho G^2.
class RowSolver {
 public:
  RowSolver(const Matrix& gram, const AtomSet& atoms, double rho)
      : gram_(gram), atoms_(atoms), rho_(rho) {
    const double scale = std::max(1.0, gram.trace() / static_cast<double>(gram.rows()));
    Matrix system = gram + rho * gram * gram;
    system.diagonal().array() += 1e-8 * scale;
    factor_.compute(system);
    if (factor_.info() != Eigen::Success) throw std::runtime_error("solve_debias_matrix: factorization failed");
  }

  struct Outcome {
    Vector omega;
    bool feasible = false;
    bool converged = false;
  };

  // With `stop_when_feasible` the solve ends at the first iterate meeting the
  // constraint, which is all the bisection needs.
  Outcome solve(Index row, double eta, const Vector& warm, int max_iterations, double eps,
                bool stop_when_feasible) const {
    const Index p = gram_.rows();
    Vector e = Vector::Zero(p);
    e(row) = 1.0;
    const double limit = eta * (1.0 + kRowSlack) + 1e-12;
    Outcome out;
    out.omega = warm;
    Vector gw = gram_ * warm;
    if (atoms_.dual_norm(gw - e) <= limit) {
      out.feasible = true;
      if (stop_when_feasible) return out;
    }
    Vector r = atoms_.project_dual_ball(gw - e, eta);
    Vector u = Vector::Zero(p);
    Vector w = warm;
    for (int iter = 0; iter < max_iterations; ++iter) {
      w = factor_.solve(rho_ * (gram_ * (e + r - u)));
      gw = gram_ * w;
      const Vector r_old = r;
      r = atoms_.project_dual_ball(gw - e + u, eta);
      u += gw - e - r;
      const double primal = (gw - e - r).norm();
      const double dual = rho_ * (gram_ * (r - r_old)).norm();
      const bool small = primal <= eps * (1.0 + std::max(gw.norm(), 1.0)) && dual <= eps * (1.0 + rho_ * u.norm());
      if ((stop_when_feasible || small) && atoms_.dual_norm(gw - e) <= limit) {
        out.omega = w;
        out.feasible = true;
        out.converged = small;
        return out;
      }
    }
    if (atoms_.dual_norm(gram_ * w - e) <= limit) {
      out.omega = w;
      out.feasible = true;
    }
    return out;
  }

 private:
  const Matrix& gram_;
  const AtomSet& atoms_;
  double rho_;
  Eigen::LLT<Matrix> factor_;
};

}  // namespace

DebiasMatrix exact_inverse_debias(const DesignOperator& design, const AtomSet& atoms) {
  if (atoms.dimension() != design.cols()) throw DimensionError("exact_inverse_debias: dimension mismatch");
  const Matrix gram = design.gram();
  if (design.rows() < design.cols() || !nonsingular(gram)) {
    throw std::invalid_argument("exact_inverse_debias: X^T X is singular (needs n >= p and full column rank)");
  }
  DebiasMatrix out;
  out.mode = DebiasMode::kExactInverse;
  out.used_inverse = true;
  const Eigen::LLT<Matrix> chol(gram);
  out.omega = chol.solve(Matrix::Identity(gram.rows(), gram.cols()));
  out.omega = 0.5 * (out.omega + out.omega.transpose()).eval();
  out.row_converged.assign(static_cast<std::size_t>(gram.rows()), true);
  fill_residuals(out, gram, atoms);
  return out;
}

DebiasMatrix solve_debias_matrix(const DesignOperator& design, const AtomSet& atoms, const DebiasOptions& options) {
  if (atoms.dimension() != design.cols()) throw DimensionError("solve_debias_matrix: dimension mismatch");
  options.solver.validate();
  if (options.mode == DebiasMode::kExactInverse) return exact_inverse_debias(design, atoms);
  if (options.mode == DebiasMode::kFixedEta && (!options.eta_target || !(*options.eta_target >= 0.0))) {
    throw std::invalid_argument("solve_debias_matrix: fixed-eta mode needs eta_target >= 0");
  }
  if (!(options.bisection_tolerance > 0.0 && options.bisection_tolerance < 1.0)) {
    throw std::invalid_argument("solve_debias_matrix: bisection_tolerance must lie in (0, 1)");
  }

  const Matrix gram = design.gram();
  const Index p = gram.rows();
  if (options.mode == DebiasMode::kMinimizeEta && nonsingular(gram)) {
    DebiasMatrix out = exact_inverse_debias(design, atoms);
    out.mode = DebiasMode::kMinimizeEta;
    return out;
  }

  const double lmax = max_eigenvalue(gram);
  const RowSolver solver(gram, atoms, lmax > 0.0 ? 1.0 / lmax : 1.0);
  DebiasMatrix out;
  out.mode = options.mode;
  out.omega = Matrix::Zero(p, p);
  std::vector<char> converged(static_cast<std::size_t>(p), 0);

  parallel_for(p, options.threads, [&](Index i) {
    Vector e = Vector::Zero(p);
    e(i) = 1.0;
    Vector identity_row = e;
    Vector g_e = gram.col(i) - e;
    double eta = 0.0;
    Vector witness = identity_row;
    if (options.mode == DebiasMode::kFixedEta) {
      eta = *options.eta_target;
    } else {
      // The identity row is feasible at hi, so the bracket starts valid.
      double hi = atoms.dual_norm(g_e);
      double lo = 0.0;
      const double width = hi;
      while (hi - lo > options.bisection_tolerance * width) {
        const double mid = 0.5 * (lo + hi);
        const auto trial = solver.solve(i, mid, witness, options.feasibility_iterations, options.solver.eps_primal, true);
        if (trial.feasible) {
          hi = mid;
          witness = trial.omega;
        } else {
          lo = mid;
        }
      }
      eta = hi;
    }
    const auto final_solve = solver.solve(i, eta, witness, options.solver.max_iterations, options.solver.eps_primal, false);
    const Vector& row = final_solve.feasible ? final_solve.omega : witness;
    out.omega.row(i) = row.transpose();
    converged[static_cast<std::size_t>(i)] = final_solve.converged ? 1 : 0;
  });

  out.row_converged.assign(converged.begin(), converged.end());
  fill_residuals(out, gram, atoms);
  return out;
}

Vector debiased_estimate(const Vector& estimate, const DebiasMatrix& debias, const ProblemInstance& problem) {
  require_size(estimate, problem.p(), "debiased_estimate estimate");
  if (debias.omega.rows() != problem.p() || debias.omega.cols() != problem.p()) {
    throw DimensionError("debiased_estimate: Omega must be p x p");
  }
  const Vector residual = problem.observation - problem.design.apply(estimate);
  return estimate + debias.omega * problem.design.adjoint(residual);
}

Vector debiased_estimate(const EstimateResult& estimate, const DebiasMatrix& debias, const ProblemInstance& problem) {
  return debiased_estimate(estimate.estimate, debias, problem);
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double normal_quantile(double probability) {
  if (!(probability > 0.0 && probability < 1.0)) {
    throw std::invalid_argument("normal_quantile: probability must lie in (0, 1)");
  }
  return -std::sqrt(2.0) * boost::math::erfc_inv(2.0 * probability);
}

double two_sided_p_value(double z) { return std::min(1.0, std::erfc(std::abs(z) / std::sqrt(2.0))); }

Contrast coordinate_contrast(Index p, Index i) {
  if (i < 0 || i >= p) throw std::invalid_argument("coordinate_contrast: index out of range");
  Vector v = Vector::Zero(p);
  v(i) = 1.0;
  return {"e" + std::to_string(i), std::move(v)};
}

Contrast pair_contrast(Index p, Index a, Index b) {
  if (a < 0 || b < 0 || a >= p || b >= p || a == b) throw std::invalid_argument("pair_contrast: bad indices");
  Vector v = Vector::Zero(p);
  v(a) = v(b) = 1.0 / std::sqrt(2.0);
  return {"e" + std::to_string(a) + "+e" + std::to_string(b), std::move(v)};
}

double variance_factor(const DebiasMatrix& debias, const DesignOperator& design, const Vector& v) {
  require_size(v, design.cols(), "variance_factor contrast");
  return design.apply(debias.omega.transpose() * v).squaredNorm();
}

namespace {

void check_contrast(const Vector& v) {
  if (!v.allFinite() || std::abs(v.norm() - 1.0) > 1e-8) {
    throw std::invalid_argument("contrast must have unit l2 norm (within 1e-8)");
  }
}

}  // namespace

TestResult hypothesis_test(const Vector& debiased, const DebiasMatrix& debias, const DesignOperator& design,
                           double sigma, const Vector& v, double null_value) {
  require_size(debiased, design.cols(), "hypothesis_test debiased");
  check_contrast(v);
  if (!(sigma > 0.0)) throw std::invalid_argument("hypothesis_test: sigma must be > 0");
  const double vf = variance_factor(debias, design, v);
  if (!(vf > 0.0)) throw std::domain_error("hypothesis_test: zero variance factor");
  const double n = static_cast<double>(design.rows());
  TestResult out;
  out.z = std::sqrt(n) * (v.dot(debiased) - null_value) / (sigma * std::sqrt(vf));
  out.p_value = two_sided_p_value(out.z);
  return out;
}

InferenceResult confidence_interval(const Vector& debiased, const DebiasMatrix& debias, const DesignOperator& design,
                                    double sigma, const Contrast& contrast, double alpha,
                                    std::optional<double> null_value) {
  require_size(debiased, design.cols(), "confidence_interval debiased");
  if (!(alpha > 0.0 && alpha <= 1.0)) throw std::invalid_argument("confidence_interval: alpha must lie in (0, 1]");
  if (!(sigma >= 0.0)) throw std::invalid_argument("confidence_interval: sigma must be >= 0");
  check_contrast(contrast.v);

  InferenceResult out;
  out.contrast_id = contrast.id;
  out.contrast = contrast.v;
  out.alpha = alpha;
  out.eta = debias.eta;
  out.point = contrast.v.dot(debiased);
  out.variance_factor = variance_factor(debias, design, contrast.v);
  const Index k = (contrast.v.array() != 0.0).count();
  if (k > 10) out.warnings.push_back("contrast has " + std::to_string(k) + " nonzeros (> 10)");
  const double quantile = alpha >= 1.0 ? 0.0 : normal_quantile(1.0 - alpha / 2.0);
  const double half = quantile * sigma * std::sqrt(out.variance_factor / static_cast<double>(design.rows()));
  out.ci_low = out.point - half;
  out.ci_high = out.point + half;
  if (null_value) {
    out.null_value = null_value;
    const TestResult test = hypothesis_test(debiased, debias, design, sigma, contrast.v, *null_value);
    out.z_statistic = test.z;
    out.p_value = test.p_value;
  }
  return out;
}

RemainderReport debias_remainder_bound(const EstimateResult& estimate, const DebiasMatrix& debias, double gamma,
                                       const DesignOperator& design, const std::optional<Vector>& truth) {
  RemainderReport out;
  out.bound = gamma * gamma * estimate.lambda * debias.eta;
  if (truth) {
    require_size(*truth, design.cols(), "debias_remainder_bound truth");
    const Vector error = *truth - estimate.estimate;
    const Vector delta = debias.omega * design.adjoint(design.apply(error)) - error;
    out.realized = delta.lpNorm<Eigen::Infinity>();
  }
  return out;
}

std::string inference_csv(const std::vector<InferenceResult>& results) {
  std::string out =
      csv_row({"contrast_id", "point", "ci_low", "ci_high", "z", "p_value", "variance_factor", "eta", "lambda"});
  for (const InferenceResult& r : results) {
    out += csv_row({r.contrast_id, format_double(r.point), format_double(r.ci_low), format_double(r.ci_high),
                    r.z_statistic ? format_double(*r.z_statistic) : std::string(),
                    r.p_value ? format_double(*r.p_value) : std::string(), format_double(r.variance_factor),
                    format_double(r.eta), format_double(r.lambda)});
  }
  return out;
}

}  // namespace atomicinv
