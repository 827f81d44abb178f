#include "atomicinv/geometry.hpp"

#include "atomicinv/linalg.hpp"
#include "atomicinv/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace atomicinv {

std::string_view to_string(BiasDirection bias) {
  switch (bias) {
    case BiasDirection::kNone: return "none";
    case BiasDirection::kLower: return "lower";
    case BiasDirection::kUpper: return "upper";
  }
  return "none";
}

namespace {

void require_mc_samples(Index samples, const char* what) {
  if (samples < kMinMcSamples) {
    throw std::invalid_argument(std::string(what) + ": mc_samples must be >= " + std::to_string(kMinMcSamples));
  }
}

// Mean and standard error of draw(i, rng) over i in [0, samples), draw i seeded
// by derive_seed(seed, {i}).
McEstimate mc_mean(Index samples, std::uint64_t seed, unsigned threads,
                   const std::function<double(Rng&)>& draw) {
  std::vector<double> values(static_cast<std::size_t>(samples));
  parallel_for(samples, threads, [&](Index i) {
    Rng rng(derive_seed(seed, {static_cast<std::uint64_t>(i)}));
    values[static_cast<std::size_t>(i)] = draw(rng);
  });
  McEstimate out;
  out.samples = samples;
  out.estimate = pairwise_mean(values);
  out.std_error = sample_stddev(values) / std::sqrt(static_cast<double>(samples));
  return out;
}

Vector normalized(const Vector& h) {
  const double norm = h.norm();
  return norm > 0.0 ? Vector(h / norm) : h;
}

// An element s of the subdifferential of ||.||_A at h, i.e. ||s||_A^* <= 1
// and <s, h> = ||h||_A.
Vector norm_subgradient(const AtomSet& atoms, const Vector& h) {
  const Shape& shape = atoms.shape();
  switch (atoms.family()) {
    case AtomFamily::kSparse:
      return h.unaryExpr([](double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); });
    case AtomFamily::kSign: {
      Index arg = 0;
      h.cwiseAbs().maxCoeff(&arg);
      Vector s = Vector::Zero(h.size());
      s(arg) = h(arg) < 0.0 ? -1.0 : 1.0;
      return s;
    }
    case AtomFamily::kLowRank: {
      const SortedSvd svd = sorted_svd(as_matrix(h, shape.rows, shape.cols));
      const Index rank = (svd.s.array() > 1e-12 * std::max(svd.s(0), 1e-300)).count();
      return vec(svd.u.leftCols(rank) * svd.v.leftCols(rank).transpose());
    }
    case AtomFamily::kOrthogonal: {
      const SortedSvd svd = sorted_svd(as_matrix(h, shape.rows, shape.cols));
      return vec(svd.u.col(0) * svd.v.col(0).transpose());
    }
  }
  return Vector::Zero(h.size());
}

}  // namespace

McEstimate gaussian_width_mc(Index dim, const std::function<double(const Vector&)>& inner_sup, Index samples,
                             std::uint64_t seed, unsigned threads) {
  require_mc_samples(samples, "gaussian_width_mc");
  if (dim < 1) throw std::invalid_argument("gaussian_width_mc: dimension must be >= 1");
  return mc_mean(samples, seed, threads, [&](Rng& rng) { return inner_sup(rng.normal_vector(dim)); });
}

double chi_mean(Index p) {
  if (p < 1) throw std::invalid_argument("chi_mean: p must be >= 1");
  const double k = static_cast<double>(p);
  return std::sqrt(2.0) * std::exp(std::lgamma((k + 1.0) / 2.0) - std::lgamma(k / 2.0));
}

double sampled_cone_support(const TangentCone& cone, const Vector& g, int restarts, int ascent_steps, Rng& rng) {
  if (restarts < 1) throw std::invalid_argument("sampled_cone_support: restarts must be >= 1");
  Vector best_h;
  double best = -std::numeric_limits<double>::infinity();
  for (int k = 0; k < restarts; ++k) {
    Vector h = cone.sample_direction(rng);
    const double value = g.dot(h);
    if (value > best) {
      best = value;
      best_h = std::move(h);
    }
  }
  double step = 0.5;
  for (int k = 0; k < ascent_steps && step > 1e-6; ++k) {
    const Vector tangent = g - g.dot(best_h) * best_h;
    const double tnorm = tangent.norm();
    if (tnorm <= 1e-14 * g.norm()) break;
    const Vector candidate = normalized(best_h + step * tangent / tnorm);
    const double value = g.dot(candidate);
    if (value > best && cone.contains(candidate)) {
      best = value;
      best_h = candidate;
      step = std::min(1.0, 1.5 * step);
    } else {
      step *= 0.5;
    }
  }
  return std::max(best, 0.0);
}

McEstimate tangent_cone_width(const TangentCone& cone, const ConeWidthOptions& options, std::uint64_t seed) {
  require_mc_samples(options.mc_samples, "tangent_cone_width");
  const Index p = cone.dimension();
  McEstimate out;
  if (options.method == ConeWidthMethod::kProjection) {
    out = gaussian_width_mc(p, [&](const Vector& g) { return cone.ball_support(g); }, options.mc_samples, seed,
                            options.threads);
  } else {
    out = mc_mean(options.mc_samples, seed, options.threads, [&](Rng& rng) {
      const Vector g = rng.normal_vector(p);
      return sampled_cone_support(cone, g, options.restarts, options.ascent_steps, rng);
    });
    out.bias = BiasDirection::kLower;
  }
  return out;
}

Vector sample_cone_ball_point(const TangentCone& cone, Rng& rng) {
  const Vector h = cone.sample_direction(rng);
  return h * std::pow(rng.uniform(), 1.0 / static_cast<double>(cone.dimension()));
}

std::vector<double> default_epsilon_grid() {
  std::vector<double> grid;
  for (int k = 0; k <= 6; ++k) grid.push_back(std::ldexp(1.0, -k));
  return grid;
}

Index greedy_packing(const std::vector<Vector>& points, double radius) {
  std::vector<const Vector*> centers;
  const double r2 = radius * radius;
  for (const Vector& point : points) {
    const bool separated = std::all_of(centers.begin(), centers.end(),
                                       [&](const Vector* c) { return (point - *c).squaredNorm() > r2; });
    if (separated) centers.push_back(&point);
  }
  return static_cast<Index>(centers.size());
}

SudakovEstimate sudakov_estimate(const std::function<Vector(Rng&)>& point_sampler, const std::vector<double>& grid,
                                 Index budget, std::uint64_t seed) {
  if (grid.empty()) throw std::invalid_argument("sudakov_estimate: epsilon grid is empty");
  if (std::any_of(grid.begin(), grid.end(), [](double e) { return !(e > 0.0) || !std::isfinite(e); })) {
    throw std::invalid_argument("sudakov_estimate: epsilon grid must be positive and finite");
  }
  if (budget < 1000) throw std::invalid_argument("sudakov_estimate: budget must be >= 1000");
  Rng rng(seed);
  std::vector<Vector> points;
  points.reserve(static_cast<std::size_t>(budget));
  for (Index i = 0; i < budget; ++i) points.push_back(point_sampler(rng));

  SudakovEstimate out;
  out.budget = budget;
  out.grid = grid;
  for (double eps : grid) {
    const Index count = greedy_packing(points, 2.0 * eps);
    out.packing.push_back(count);
    const double value = eps * std::sqrt(std::log(static_cast<double>(count)));
    if (value > out.value) {
      out.value = value;
      out.epsilon = eps;
    }
  }
  if (out.epsilon == 0.0) out.epsilon = grid.front();
  return out;
}

VolumeEstimate volume_ratio_mc(const std::function<bool(const Vector&)>& membership, Index p, Index samples,
                               std::uint64_t seed) {
  if (p < 1) throw std::invalid_argument("volume_ratio_mc: p must be >= 1");
  if (p > kMaxVolumeDimension) {
    throw std::invalid_argument("volume_ratio_mc: p = " + std::to_string(p) +
                                " exceeds 8; the hit rate of ball samples in a cone decays exponentially in p");
  }
  require_mc_samples(samples, "volume_ratio_mc");
  Rng rng(seed);
  Index hits = 0;
  for (Index i = 0; i < samples; ++i) {
    if (membership(rng.unit_ball(p))) ++hits;
  }
  VolumeEstimate out;
  out.samples = samples;
  const double n = static_cast<double>(samples);
  const double dim = static_cast<double>(p);
  out.fraction = static_cast<double>(hits) / n;
  out.value = std::sqrt(dim) * std::pow(out.fraction, 1.0 / dim);
  if (hits > 0) {
    const double frac_se = std::sqrt(out.fraction * (1.0 - out.fraction) / n);
    out.std_error = std::sqrt(dim) / dim * std::pow(out.fraction, 1.0 / dim - 1.0) * frac_se;
  }
  return out;
}

IsometryEstimate local_isometry_constants(const DesignOperator& design, const TangentCone& cone, Index mc_samples,
                                          int restarts, std::uint64_t seed) {
  if (design.cols() != cone.dimension()) throw DimensionError("local_isometry_constants: dimension mismatch");
  if (mc_samples < 1 || restarts < 1) throw std::invalid_argument("local_isometry_constants: empty sample budget");
  const Matrix gram = design.gram();
  const auto energy = [&](const Vector& h) { return std::max(h.dot(gram * h), 0.0); };

  Rng rng(seed);
  const Index total = mc_samples * restarts;
  Vector h_min;
  Vector h_max;
  double q_min = std::numeric_limits<double>::infinity();
  double q_max = -1.0;
  for (Index i = 0; i < total; ++i) {
    Vector h = cone.sample_direction(rng);
    const double q = energy(h);
    if (q < q_min) {
      q_min = q;
      h_min = h;
    }
    if (q > q_max) {
      q_max = q;
      h_max = std::move(h);
    }
  }

  const double lmax = max_eigenvalue(gram);
  const double base_step = lmax > 0.0 ? 0.5 / lmax : 0.0;
  const auto refine = [&](Vector h, double q, double sign) {
    double step = base_step;
    for (int iter = 0; iter < 200 && step > 1e-8 * base_step; ++iter) {
      const Vector candidate = normalized(cone.project(h + sign * step * (gram * h)));
      if (candidate.norm() == 0.0) {
        step *= 0.5;
        continue;
      }
      const double value = energy(candidate);
      if (sign * (value - q) > 0.0) {
        h = candidate;
        q = value;
      } else {
        step *= 0.5;
      }
    }
    return q;
  };
  if (base_step > 0.0) {
    q_min = refine(h_min, q_min, -1.0);
    q_max = refine(h_max, q_max, 1.0);
  }
  IsometryEstimate out;
  out.samples = total;
  out.phi = std::sqrt(q_min);
  out.psi = std::sqrt(q_max);
  return out;
}

McEstimate empirical_asphericity(const TangentCone& cone, Index samples, std::uint64_t seed) {
  if (samples < 1) throw std::invalid_argument("empirical_asphericity: samples must be >= 1");
  const AtomSet& atoms = cone.atoms();
  Rng rng(seed);
  Vector best_h;
  double best = 0.0;
  for (Index i = 0; i < samples; ++i) {
    Vector h = cone.sample_direction(rng);
    const double ratio = atoms.norm(h);
    if (ratio > best) {
      best = ratio;
      best_h = std::move(h);
    }
  }
  double step = 0.5;
  for (int iter = 0; iter < 200 && step > 1e-8; ++iter) {
    const Vector s = norm_subgradient(atoms, best_h);
    const Vector ascent = s - s.dot(best_h) * best_h;
    if (ascent.norm() <= 1e-14) break;
    const Vector candidate = normalized(cone.project(best_h + step * ascent));
    if (candidate.norm() == 0.0) {
      step *= 0.5;
      continue;
    }
    const double ratio = atoms.norm(candidate);
    if (ratio > best) {
      best = ratio;
      best_h = candidate;
    } else {
      step *= 0.5;
    }
  }
  McEstimate out;
  out.estimate = best;
  out.samples = samples;
  out.bias = BiasDirection::kLower;
  return out;
}

McEstimate image_atom_width(const DesignOperator& design, const AtomSet& atoms, Index samples, std::uint64_t seed,
                            unsigned threads) {
  if (atoms.dimension() != design.cols()) throw DimensionError("image_atom_width: dimension mismatch");
  require_mc_samples(samples, "image_atom_width");
  const Index n = design.rows();
  const Index p = design.cols();
  if (n > p) {
    // X^T g ~ N(0, X^T X); sample it as L z with X^T X = L L^T.
    const Eigen::LLT<Matrix> chol(design.gram());
    if (chol.info() == Eigen::Success) {
      const Matrix l = chol.matrixL();
      return gaussian_width_mc(p, [&](const Vector& z) { return atoms.dual_norm(l * z); }, samples, seed, threads);
    }
  }
  return gaussian_width_mc(n, [&](const Vector& g) { return atoms.dual_norm(design.adjoint(g)); }, samples, seed,
                           threads);
}

ConeDiagnostics diagnose_cone(const DesignOperator& design, const TangentCone& cone, const DiagnosticsOptions& options,
                              std::uint64_t seed) {
  if (design.cols() != cone.dimension()) throw DimensionError("diagnose_cone: dimension mismatch");
  const Index p = cone.dimension();
  ConeDiagnostics out;
  out.n = design.rows();
  out.p = p;
  out.delta = options.delta.value_or(default_delta(p));

  ConeWidthOptions width;
  width.mc_samples = options.width_samples;
  width.restarts = options.width_restarts;
  width.method = options.width_method;
  width.threads = options.threads;
  out.width = tangent_cone_width(cone, width, derive_seed(seed, {0}));
  out.sudakov = sudakov_estimate([&](Rng& rng) { return sample_cone_ball_point(cone, rng); }, default_epsilon_grid(),
                                 options.sudakov_budget, derive_seed(seed, {1}));
  if (p <= kMaxVolumeDimension) {
    out.volume = volume_ratio_mc([&](const Vector& v) { return cone.contains(v); }, p, options.volume_samples,
                                 derive_seed(seed, {2}));
  }
  out.isometry = local_isometry_constants(design, cone, options.isometry_samples, options.isometry_restarts,
                                          derive_seed(seed, {3}));
  out.gamma = empirical_asphericity(cone, options.asphericity_samples, derive_seed(seed, {4}));
  out.gamma_bound = asphericity_upper_bound(cone.atoms().family(), cone.structure_size());
  out.atom_width = image_atom_width(DesignOperator::identity(p), cone.atoms(), options.atom_width_samples,
                                    derive_seed(seed, {5}), options.threads);
  out.image_width = image_atom_width(design, cone.atoms(), options.atom_width_samples, derive_seed(seed, {6}),
                                     options.threads);
  return out;
}

BoundReport evaluate_bounds(const ConeDiagnostics& diagnostics, double sigma, Index n, BoundConstants constants) {
  if (!(sigma >= 0.0)) throw std::invalid_argument("evaluate_bounds: sigma must be >= 0");
  if (n < 1) throw std::invalid_argument("evaluate_bounds: n must be >= 1");
  if (!(constants.c > 0.0 && constants.c < 1.0)) throw std::invalid_argument("evaluate_bounds: c must lie in (0, 1)");
  if (diagnostics.width.samples == 0 || diagnostics.image_width.samples == 0 || diagnostics.gamma.samples == 0 ||
      diagnostics.atom_width.samples == 0) {
    throw std::invalid_argument("evaluate_bounds: diagnostics are missing width, image width, or asphericity");
  }
  const double c = constants.c;
  const double root_n = std::sqrt(static_cast<double>(n));
  const double gamma = diagnostics.gamma.estimate;

  BoundReport out;
  out.constants = constants;
  out.upper = 2.0 * sigma / ((1.0 - c) * (1.0 - c)) * gamma * diagnostics.image_width.estimate / root_n;
  const double volume = diagnostics.volume ? diagnostics.volume->value : 0.0;
  const double complexity = std::max(diagnostics.sudakov.value, volume) / root_n;
  out.lower = constants.c0 * sigma * sigma / ((1.0 + c) * (1.0 + c)) * complexity * complexity;
  const double w = diagnostics.width.estimate + diagnostics.delta;
  out.min_n = 4.0 * w * w / (c * c);
  out.upp_link_lhs = gamma * diagnostics.atom_width.estimate;
  out.upp_link_rhs = diagnostics.width.estimate;
  const double joint = std::hypot(gamma * diagnostics.atom_width.std_error, diagnostics.width.std_error);
  out.upp_link_holds = out.upp_link_lhs >= out.upp_link_rhs - 3.0 * joint;
  return out;
}

}  // namespace atomicinv
