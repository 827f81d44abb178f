#include "atomicinv/solver.hpp"

#include "atomicinv/geometry.hpp"
#include "atomicinv/linalg.hpp"
#include "atomicinv/rng.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>

namespace atomicinv {

void SolverConfig::validate() const {
  if (max_iterations < 1) throw std::invalid_argument("SolverConfig: max_iterations must be >= 1");
  if (!(eps_primal > 0.0) || !(eps_dual > 0.0)) throw std::invalid_argument("SolverConfig: tolerances must be > 0");
  if (!(rho > 0.0) || !std::isfinite(rho)) throw std::invalid_argument("SolverConfig: rho must be > 0");
  if (!(relaxation >= 1.0 && relaxation < 2.0)) {
    throw std::invalid_argument("SolverConfig: relaxation must lie in [1, 2)");
  }
  if (anderson_memory < 0) throw std::invalid_argument("SolverConfig: anderson_memory must be >= 0");
}

namespace {

constexpr double kFeasibilityRelative = 1e-5;
constexpr double kFeasibilityAbsolute = 1e-9;
constexpr int kRhoUpdateInterval = 10;
constexpr double kRhoBalance = 10.0;

double feasibility_limit(double lambda, double b_dual) {
  return lambda * (1.0 + kFeasibilityRelative) + kFeasibilityAbsolute * (1.0 + b_dual);
}

bool gram_singular(const Matrix& gram) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(gram, Eigen::EigenvaluesOnly);
  const double top = std::max(eig.eigenvalues().maxCoeff(), 0.0);
  return eig.eigenvalues().minCoeff() <= 1e-12 * std::max(top, 1.0) * static_cast<double>(gram.rows());
}

// Type-II Anderson acceleration of a fixed-point map x -> T(x). Extrapolated
// points are checked against the best residual ||T(x) - x|| seen so far; a
// point exceeding it by more than kSafeguard is replaced by T(best point).
class Anderson {
 public:
  Anderson(Index dim, int memory) : dim_(dim), memory_(memory) {}

  void reset() {
    df_.clear();
    dg_.clear();
    f_prev_.resize(0);
    best_ = std::numeric_limits<double>::infinity();
  }

  /// True when `residual`, observed at the last returned point, breaks the safeguard.
  bool rejects(double residual) const { return memory_ > 0 && residual > kSafeguard * best_; }

  /// Plain image of the best point; the history is cleared.
  Vector fallback() {
    Vector out = safe_image_;
    reset();
    return out;
  }

  /// Next state given the current state x, its image g = T(x) and ||g - x||.
  Vector extrapolate(const Vector& x, const Vector& g, double residual) {
    if (memory_ == 0) return g;
    if (residual < best_) {
      best_ = residual;
      safe_image_ = g;
    }
    const Vector f = g - x;
    if (f_prev_.size() == dim_) {
      df_.push_back(f - f_prev_);
      dg_.push_back(g - g_prev_);
      if (static_cast<int>(df_.size()) > memory_) {
        df_.erase(df_.begin());
        dg_.erase(dg_.begin());
      }
    }
    f_prev_ = f;
    g_prev_ = g;
    if (df_.empty()) return g;
    const Index k = static_cast<Index>(df_.size());
    Matrix df(dim_, k);
    Matrix dg(dim_, k);
    for (Index j = 0; j < k; ++j) {
      df.col(j) = df_[static_cast<std::size_t>(j)];
      dg.col(j) = dg_[static_cast<std::size_t>(j)];
    }
    Matrix normal = df.transpose() * df;
    normal.diagonal().array() += kRegularization * (1.0 + normal.trace());
    const Vector gamma = normal.ldlt().solve(df.transpose() * f);
    if (!gamma.allFinite()) return g;
    return g - dg * gamma;
  }

 private:
  static constexpr double kSafeguard = 1.1;
  static constexpr double kRegularization = 1e-10;
  Index dim_;
  int memory_;
  std::vector<Vector> df_;
  std::vector<Vector> dg_;
  Vector f_prev_;
  Vector g_prev_;
  Vector safe_image_;
  double best_ = std::numeric_limits<double>::infinity();
};

}  // namespace

EstimateResult solve_constrained(const ProblemInstance& problem, const AtomSet& atoms, double lambda,
                                 const SolverConfig& config) {
  problem.validate();
  config.validate();
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw std::invalid_argument("solve_constrained: lambda must be >= 0");
  if (atoms.dimension() != problem.p()) {
    throw DimensionError("solve_constrained: atom set dimension " + std::to_string(atoms.dimension()) +
                         " does not match p = " + std::to_string(problem.p()));
  }

  const Index p = problem.p();
  const Matrix gram = problem.design.gram();
  const Vector b = problem.design.adjoint(problem.observation);
  const double b_dual = atoms.dual_norm(b);

  EstimateResult result;
  result.lambda = lambda;
  result.rank_deficient = lambda == 0.0 && gram_singular(gram);

  // (I + G^2) M = Z - U1 + G (b - R - U2); the system matrix does not depend on rho.
  Matrix system = gram * gram;
  system.diagonal().array() += 1.0;
  const Eigen::LLT<Matrix> factor(system);
  if (factor.info() != Eigen::Success) throw std::runtime_error("solve_constrained: factorization failed");

  // Fixed-point state w = [Z; R; U1; U2]; one ADMM sweep is the map w -> T(w).
  Vector w = Vector::Zero(4 * p);
  w.segment(p, p) = atoms.project_dual_ball(b, lambda);
  Vector m(p);
  Vector gm(p);
  double rho = config.rho;
  const double alpha = config.relaxation;
  const double b_norm = b.norm();
  const auto sweep = [&](const Vector& state) {
    const auto z = state.segment(0, p);
    const auto r = state.segment(p, p);
    const auto u1 = state.segment(2 * p, p);
    const auto u2 = state.segment(3 * p, p);
    m = factor.solve(z - u1 + gram * (b - r - u2));
    gm = gram * m;
    const Vector m_hat = alpha * m + (1.0 - alpha) * z;
    const Vector gm_hat = alpha * gm + (1.0 - alpha) * (b - r);
    Vector next(4 * p);
    next.segment(0, p) = atoms.prox(m_hat + u1, 1.0 / rho);
    next.segment(p, p) = atoms.project_dual_ball(b - gm_hat - u2, lambda);
    next.segment(2 * p, p) = u1 + m_hat - next.segment(0, p);
    next.segment(3 * p, p) = u2 + gm_hat + next.segment(p, p) - b;
    return next;
  };

  Anderson anderson(4 * p, config.anderson_memory);
  int rho_interval = kRhoUpdateInterval;
  int since_rho_update = 0;
  int last_direction = 0;

  int iter = 0;
  Vector next;
  for (; iter < config.max_iterations; ++iter) {
    next = sweep(w);
    double fixed_point = (next - w).norm();
    if (anderson.rejects(fixed_point)) {
      w = anderson.fallback();
      next = sweep(w);
      fixed_point = (next - w).norm();
    }
    const auto z = next.segment(0, p);
    const auto r = next.segment(p, p);
    const Vector primal1 = m - z;
    const Vector primal2 = gm + r - b;
    const double primal = std::sqrt(primal1.squaredNorm() + primal2.squaredNorm());
    const double dual = rho * (gram * (r - w.segment(p, p)) - (z - w.segment(0, p))).norm();
    result.primal_residual = primal;
    result.dual_residual = dual;
    if (config.record_history) result.merit_history.push_back(fixed_point);

    const double ax = std::sqrt(m.squaredNorm() + gm.squaredNorm());
    const double bz = next.head(2 * p).norm();
    const double eps_pri = config.eps_primal * (1.0 + std::max({ax, bz, b_norm}));
    const Vector scaled_dual = next.segment(2 * p, p) + gram * next.segment(3 * p, p);
    const double eps_dual = config.eps_dual * (1.0 + rho * scaled_dual.norm());
    if (primal <= eps_pri && dual <= eps_dual) {
      if (atoms.dual_norm(b - gram * z) <= feasibility_limit(lambda, b_dual)) {
        result.converged = true;
        ++iter;
        break;
      }
    }

    // Residual balancing; a reversal of direction widens the update interval so rho settles.
    if (config.adaptive_rho && ++since_rho_update >= rho_interval) {
      since_rho_update = 0;
      int direction = 0;
      if (primal > kRhoBalance * dual) {
        direction = 1;
      } else if (dual > kRhoBalance * primal) {
        direction = -1;
      }
      if (direction != 0) {
        if (last_direction != 0 && direction != last_direction) rho_interval *= 2;
        last_direction = direction;
        const double factor_rho = direction > 0 ? 2.0 : 0.5;
        rho *= factor_rho;
        next.tail(2 * p) /= factor_rho;
        anderson.reset();
        w = next;
        continue;
      }
    }
    w = anderson.extrapolate(w, next, fixed_point);
  }

  result.iterations = iter;
  result.final_rho = rho;
  result.estimate = next.head(p);
  result.residual_dual_norm = atoms.dual_norm(b - gram * result.estimate);
  result.atomic_norm_value = atoms.norm(result.estimate);
  return result;
}

double default_delta(Index p) { return p > 1 ? std::sqrt(2.0 * std::log(static_cast<double>(p))) : 0.0; }

namespace {

constexpr int kAscentRestarts = 50;
constexpr int kLowRankRestarts = 10;
constexpr int kAscentIterations = 200;
constexpr Index kSignEnumerationLimit = 20;

// max over v in {+-1}^p of v^T G v by Gray-code enumeration with v_0 = +1.
double sign_quadratic_enumerate(const Matrix& gram) {
  const Index p = gram.rows();
  Vector v = Vector::Ones(p);
  Vector gv = gram * v;
  double q = v.dot(gv);
  double best = q;
  const std::uint64_t count = std::uint64_t{1} << (p - 1);
  for (std::uint64_t k = 1; k < count; ++k) {
    // Gray code k ^ (k >> 1) differs from its predecessor in bit ctz(k).
    const Index j = static_cast<Index>(std::countr_zero(k)) + 1;
    q += -4.0 * v(j) * gv(j) + 4.0 * gram(j, j);
    gv -= 2.0 * v(j) * gram.col(j);
    v(j) = -v(j);
    best = std::max(best, q);
  }
  return best;
}

double sign_quadratic_ascent(const Matrix& gram, std::uint64_t seed) {
  const Index p = gram.rows();
  Rng rng(seed);
  double best = 0.0;
  for (int restart = 0; restart < kAscentRestarts; ++restart) {
    Vector v(p);
    for (Index i = 0; i < p; ++i) v(i) = rng.uniform() < 0.5 ? -1.0 : 1.0;
    Vector gv = gram * v;
    double q = v.dot(gv);
    for (int iter = 0; iter < kAscentIterations; ++iter) {
      // Linearization step: v <- sign(G v) never decreases v^T G v for PSD G.
      Vector next = gv.unaryExpr([](double x) { return x < 0.0 ? -1.0 : 1.0; });
      const Vector g_next = gram * next;
      const double q_next = next.dot(g_next);
      bool improved = q_next > q + 1e-14 * std::abs(q);
      if (improved) {
        v = std::move(next);
        gv = g_next;
        q = q_next;
      }
      // Single flips.
      for (Index j = 0; j < p; ++j) {
        const double delta = -4.0 * v(j) * gv(j) + 4.0 * gram(j, j);
        if (delta > 1e-14 * std::abs(q)) {
          q += delta;
          gv -= 2.0 * v(j) * gram.col(j);
          v(j) = -v(j);
          improved = true;
        }
      }
      if (!improved) break;
    }
    best = std::max(best, q);
  }
  return best;
}

double top_eigenvalue_vector(const Matrix& sym, Vector& vec_out) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(sym);
  const Index last = sym.rows() - 1;
  vec_out = eig.eigenvectors().col(last);
  return eig.eigenvalues()(last);
}

// max over unit u (p1), v (p2) of ||X vec(u v^T)||^2 by alternating eigen steps.
double low_rank_quadratic_ascent(const Matrix& gram, Index p1, Index p2, std::uint64_t seed) {
  Rng rng(seed);
  double best = 0.0;
  for (int restart = 0; restart < kLowRankRestarts; ++restart) {
    Vector v = rng.unit_sphere(p2);
    Vector u(p1);
    double value = 0.0;
    for (int iter = 0; iter < kAscentIterations; ++iter) {
      Matrix a = Matrix::Zero(p1, p1);
      for (Index k = 0; k < p2; ++k) {
        for (Index l = 0; l < p2; ++l) a += v(k) * v(l) * gram.block(k * p1, l * p1, p1, p1);
      }
      top_eigenvalue_vector(0.5 * (a + a.transpose()), u);
      Matrix c = Matrix::Zero(p2, p2);
      for (Index k = 0; k < p2; ++k) {
        for (Index l = 0; l < p2; ++l) c(k, l) = u.dot(gram.block(k * p1, l * p1, p1, p1) * u);
      }
      const double next = top_eigenvalue_vector(0.5 * (c + c.transpose()), v);
      const bool done = next <= value * (1.0 + 1e-12);
      value = std::max(value, next);
      if (done) break;
    }
    best = std::max(best, value);
  }
  return best;
}

// max over orthogonal Q of vec(Q)^T G vec(Q) by Q <- polar(reshape(G vec Q)).
double orthogonal_quadratic_ascent(const Matrix& gram, Index m, std::uint64_t seed) {
  Rng rng(seed);
  double best = 0.0;
  for (int restart = 0; restart < kAscentRestarts; ++restart) {
    Matrix q = polar_factor(rng.normal_matrix(m, m));
    double value = vec(q).dot(gram * vec(q));
    for (int iter = 0; iter < kAscentIterations; ++iter) {
      const Vector grad = gram * vec(q);
      const Matrix next = polar_factor(as_matrix(grad, m, m));
      const double next_value = vec(next).dot(gram * vec(next));
      if (next_value <= value * (1.0 + 1e-13)) break;
      q = next;
      value = next_value;
    }
    best = std::max(best, value);
  }
  return best;
}

}  // namespace

double max_atom_image_norm(const DesignOperator& design, const AtomSet& atoms, std::uint64_t seed) {
  if (atoms.dimension() != design.cols()) throw DimensionError("max_atom_image_norm: dimension mismatch");
  const Matrix& x = design.matrix();
  switch (atoms.family()) {
    case AtomFamily::kSparse:
      return x.colwise().norm().maxCoeff();
    case AtomFamily::kSign: {
      const Matrix gram = design.gram();
      const double q = design.cols() <= kSignEnumerationLimit ? sign_quadratic_enumerate(gram)
                                                              : sign_quadratic_ascent(gram, seed);
      return std::sqrt(std::max(q, 0.0));
    }
    case AtomFamily::kLowRank:
      return std::sqrt(std::max(
          low_rank_quadratic_ascent(design.gram(), atoms.shape().rows, atoms.shape().cols, seed), 0.0));
    case AtomFamily::kOrthogonal:
      return std::sqrt(std::max(orthogonal_quadratic_ascent(design.gram(), atoms.shape().rows, seed), 0.0));
  }
  return 0.0;
}

LambdaEstimate compute_lambda(const DesignOperator& design, const AtomSet& atoms, double sigma,
                              const LambdaOptions& options) {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) throw std::invalid_argument("compute_lambda: sigma must be > 0");
  if (options.mc_samples < kMinMcSamples) throw std::invalid_argument("compute_lambda: mc_samples must be >= 100");
  const double delta = options.delta.value_or(default_delta(design.cols()));
  if (!(delta >= 0.0)) throw std::invalid_argument("compute_lambda: delta must be >= 0");

  LambdaEstimate out;
  out.delta = delta;
  out.mc_samples = options.mc_samples;
  const McEstimate width = image_atom_width(design, atoms, options.mc_samples, derive_seed(options.seed, {0}),
                                            options.threads);
  out.image_width = width.estimate;
  out.image_width_stderr = width.std_error;
  out.max_atom_image_norm = max_atom_image_norm(design, atoms, derive_seed(options.seed, {1}));
  const double n = static_cast<double>(design.rows());
  out.lambda = sigma / std::sqrt(n) * (out.image_width + delta * out.max_atom_image_norm);
  return out;
}

FeasibilityReport verify_feasibility(const ProblemInstance& problem, const AtomSet& atoms, const Vector& candidate,
                                     double lambda) {
  problem.validate();
  require_size(candidate, problem.p(), "verify_feasibility candidate");
  const Vector b = problem.design.adjoint(problem.observation);
  const Vector fitted = problem.design.adjoint(problem.design.apply(candidate));
  FeasibilityReport report;
  report.lambda = lambda;
  report.residual_dual_norm = atoms.dual_norm(b - fitted);
  report.feasible = report.residual_dual_norm <= feasibility_limit(lambda, atoms.dual_norm(b));
  if (problem.truth) {
    const Vector gap = fitted - problem.design.adjoint(problem.design.apply(*problem.truth));
    report.truth_gap = atoms.dual_norm(gap);
    report.truth_gap_within_2lambda = *report.truth_gap <= 2.0 * lambda * (1.0 + kFeasibilityRelative) +
                                                              kFeasibilityAbsolute * (1.0 + atoms.dual_norm(b));
  }
  return report;
}

}  // namespace atomicinv
