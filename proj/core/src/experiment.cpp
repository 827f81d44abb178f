#include "atomicinv/experiment.hpp"

#include "atomicinv/geometry.hpp"
#include "atomicinv/linalg.hpp"
#include "atomicinv/rng.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

namespace atomicinv {

std::string_view to_string(ExperimentKind kind) {
  return kind == ExperimentKind::kCoverage ? "coverage" : "estimation";
}

std::string_view to_string(Preset preset) {
  switch (preset) {
    case Preset::kCor1Sparse: return "cor1-sparse";
    case Preset::kCor2LowRank: return "cor2-lowrank";
    case Preset::kCor3Sign: return "cor3-sign";
    case Preset::kCor4Orthogonal: return "cor4-orthogonal";
    case Preset::kCustom: return "custom";
  }
  return "custom";
}

std::string_view to_string(ContrastSet set) {
  return set == ContrastSet::kAllCoordinates ? "all_coordinates" : "default";
}

ExperimentKind parse_experiment_kind(std::string_view name) {
  if (name == "estimation") return ExperimentKind::kEstimation;
  if (name == "coverage") return ExperimentKind::kCoverage;
  throw ConfigError("unknown experiment '" + std::string(name) + "' (expected estimation or coverage)");
}

Preset parse_preset(std::string_view name) {
  for (Preset p : {Preset::kCor1Sparse, Preset::kCor2LowRank, Preset::kCor3Sign, Preset::kCor4Orthogonal,
                   Preset::kCustom}) {
    if (name == to_string(p)) return p;
  }
  throw ConfigError("unknown preset '" + std::string(name) + "'");
}

ContrastSet parse_contrast_set(std::string_view name) {
  if (name == "default") return ContrastSet::kDefault;
  if (name == "all_coordinates") return ContrastSet::kAllCoordinates;
  throw ConfigError("unknown contrast set '" + std::string(name) + "'");
}

ExperimentConfig preset_config(Preset preset) {
  ExperimentConfig c;
  c.preset = preset;
  c.sigma = 1.0;
  switch (preset) {
    case Preset::kCor1Sparse:
      c.family = AtomFamily::kSparse;
      c.shape = Shape::vector(200);
      c.complexity = 5;
      c.n_values = {500, 1000, 2000, 4000};
      c.replicates = 50;
      break;
    case Preset::kCor2LowRank:
      c.family = AtomFamily::kLowRank;
      c.shape = Shape::matrix(20, 20);
      c.complexity = 2;
      c.n_values = {800, 1600, 3200};
      c.replicates = 30;
      break;
    case Preset::kCor3Sign:
      c.family = AtomFamily::kSign;
      c.shape = Shape::vector(32);
      c.complexity = 32;
      c.n_values = {256, 512, 1024};
      c.replicates = 30;
      break;
    case Preset::kCor4Orthogonal:
      c.family = AtomFamily::kOrthogonal;
      c.shape = Shape::matrix(6, 6);
      c.complexity = 6;
      c.n_values = {576, 1152, 2304};
      c.replicates = 30;
      break;
    case Preset::kCustom:
      c.family = AtomFamily::kSparse;
      c.shape = Shape::vector(20);
      c.complexity = 2;
      c.n_values = {100, 200, 400};
      c.replicates = 10;
      break;
  }
  return c;
}

std::vector<GridPoint> ExperimentConfig::grid() const {
  std::vector<GridPoint> points;
  for (Index n : n_values) points.push_back({n, shape, complexity});
  return points;
}

void ExperimentConfig::validate() const {
  if (replicates < 1) throw ConfigError("replicates must be >= 1");
  if (n_values.empty()) throw ConfigError("dimension grid: n list is empty");
  for (Index n : n_values) {
    if (n < 1) throw ConfigError("dimension grid: every n must be >= 1");
  }
  try {
    AtomSet atoms(family, shape);
    (void)atoms;
    solver.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  switch (family) {
    case AtomFamily::kSparse:
      if (complexity < 1 || complexity > shape.size()) throw ConfigError("sparse grid needs 1 <= s <= p");
      break;
    case AtomFamily::kLowRank:
      if (complexity < 1 || complexity > std::min(shape.rows, shape.cols)) {
        throw ConfigError("low-rank grid needs 1 <= r <= min(p1, p2)");
      }
      break;
    case AtomFamily::kSign:
    case AtomFamily::kOrthogonal:
      break;
  }
  const auto expect = [&](AtomFamily f, const char* what) {
    if (family != f) throw ConfigError(std::string("preset ") + std::string(to_string(preset)) + " requires " + what);
  };
  switch (preset) {
    case Preset::kCor1Sparse: expect(AtomFamily::kSparse, "sparse atoms"); break;
    case Preset::kCor2LowRank: expect(AtomFamily::kLowRank, "low-rank atoms on a matrix shape"); break;
    case Preset::kCor3Sign: expect(AtomFamily::kSign, "sign atoms"); break;
    case Preset::kCor4Orthogonal: expect(AtomFamily::kOrthogonal, "orthogonal atoms on a square shape"); break;
    case Preset::kCustom: break;
  }
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw ConfigError("sigma must be finite and >= 0");
  if (!(alpha > 0.0 && alpha <= 1.0)) throw ConfigError("alpha must lie in (0, 1]");
  if (mc_samples < kMinMcSamples) throw ConfigError("mc_samples must be >= 100");
  if (delta && !(*delta >= 0.0)) throw ConfigError("delta must be >= 0");
  if (lambda_override && !(*lambda_override >= 0.0)) throw ConfigError("lambda_override must be >= 0");
  if (!(max_failure_fraction >= 0.0 && max_failure_fraction <= 1.0)) {
    throw ConfigError("max_failure_fraction must lie in [0, 1]");
  }
  if (experiment == ExperimentKind::kCoverage) {
    if (!(sigma > 0.0)) throw ConfigError("coverage experiments need sigma > 0");
    const bool all_overdetermined =
        std::all_of(n_values.begin(), n_values.end(), [&](Index n) { return n > shape.size(); });
    if (debias_mode == DebiasMode::kExactInverse && !all_overdetermined) {
      throw ConfigError("exact debias mode needs n > p at every grid point");
    }
    if (family != AtomFamily::kSparse && !all_overdetermined) {
      throw ConfigError("coverage is supported for sparse presets or the n > p regime only");
    }
    if (debias_mode == DebiasMode::kFixedEta && (!eta || !(*eta >= 0.0))) {
      throw ConfigError("fixed debias mode needs eta >= 0");
    }
  }
}

GroundTruth make_truth(AtomFamily family, const GridPoint& point, std::uint64_t seed) {
  switch (family) {
    case AtomFamily::kSparse: return make_sparse_truth(point.shape.size(), point.complexity, seed);
    case AtomFamily::kLowRank:
      return make_low_rank_truth(point.shape.rows, point.shape.cols, point.complexity, seed);
    case AtomFamily::kSign: return make_sign_truth(point.shape.size(), seed);
    case AtomFamily::kOrthogonal: return make_orthogonal_truth(point.shape.rows, seed);
  }
  throw std::invalid_argument("make_truth: unknown family");
}

namespace {

enum Stream : std::uint64_t { kDesignStream = 0, kTruthStream = 1, kNoiseStream = 2, kLambdaStream = 3 };

std::vector<std::pair<Contrast, std::string>> contrasts_for(const ExperimentConfig& config, const Vector& truth) {
  const Index p = truth.size();
  std::vector<std::pair<Contrast, std::string>> out;
  if (config.contrasts == ContrastSet::kAllCoordinates) {
    for (Index i = 0; i < p; ++i) out.emplace_back(coordinate_contrast(p, i), "coordinate");
    return out;
  }
  std::vector<Index> support;
  std::vector<Index> off;
  for (Index i = 0; i < p; ++i) {
    if (config.family != AtomFamily::kSparse || truth(i) != 0.0) {
      support.push_back(i);
    } else {
      off.push_back(i);
    }
  }
  if (config.family != AtomFamily::kSparse) support.resize(1);
  for (Index i : support) out.emplace_back(coordinate_contrast(p, i), "on_support");
  if (!off.empty()) out.emplace_back(coordinate_contrast(p, off.front()), "off_support");
  if (p >= 2) {
    const Index a = support.front();
    const Index b = off.empty() ? (a == 0 ? 1 : 0) : off.front();
    out.emplace_back(pair_contrast(p, a, b), "pair");
  }
  return out;
}

ReplicateProblem simulate_point(const ExperimentConfig& config, Index grid_index, const GridPoint& point,
                                Index replicate) {
  ReplicateProblem out;
  out.seed = derive_seed(config.seed, {static_cast<std::uint64_t>(grid_index), static_cast<std::uint64_t>(replicate)});
  const DesignOperator design =
      gaussian_ensemble_design(point.n, point.shape.size(), derive_seed(out.seed, {kDesignStream}));
  out.truth = make_truth(config.family, point, derive_seed(out.seed, {kTruthStream}));
  out.problem = simulate_observation(design, out.truth, config.sigma, derive_seed(out.seed, {kNoiseStream}), point.shape);
  return out;
}

ExperimentRecord run_replicate(const ExperimentConfig& config, Index grid_index, const GridPoint& point,
                               Index replicate, bool coverage) {
  const auto start = std::chrono::steady_clock::now();
  ExperimentRecord rec;
  rec.preset = std::string(to_string(config.preset));
  rec.n = point.n;
  rec.p = point.shape.size();
  rec.complexity = point.complexity;
  rec.grid_index = grid_index;
  rec.replicate = replicate;

  const AtomSet atoms(config.family, point.shape);
  const ReplicateProblem sim = simulate_point(config, grid_index, point, replicate);
  rec.seed = sim.seed;
  const ProblemInstance& problem = sim.problem;
  const DesignOperator& design = problem.design;
  const GroundTruth& truth = sim.truth;

  if (config.lambda_override) {
    rec.lambda = *config.lambda_override;
  } else if (config.sigma == 0.0) {
    rec.lambda = 0.0;
  } else {
    LambdaOptions options;
    options.mc_samples = config.mc_samples;
    options.delta = config.delta;
    options.seed = derive_seed(rec.seed, {kLambdaStream});
    const LambdaEstimate lambda = compute_lambda(design, atoms, config.sigma, options);
    rec.lambda = lambda.lambda;
    rec.image_width = lambda.image_width;
  }

  const EstimateResult est = solve_constrained(problem, atoms, rec.lambda, config.solver);
  rec.converged = est.converged;
  rec.iterations = est.iterations;
  const Vector error = est.estimate - truth.parameter;
  rec.l2_error = error.norm();
  rec.atomic_error = atoms.norm(error);
  rec.prediction_error = design.apply(error).norm();

  if (coverage) {
    DebiasOptions options;
    options.mode = config.debias_mode;
    options.eta_target = config.eta;
    const DebiasMatrix debias = solve_debias_matrix(design, atoms, options);
    rec.eta = debias.eta;
    const Vector debiased = debiased_estimate(est, debias, problem);
    for (const auto& [contrast, role] : contrasts_for(config, truth.parameter)) {
      const double value = contrast.v.dot(truth.parameter);
      const InferenceResult ci =
          confidence_interval(debiased, debias, design, config.sigma, contrast, config.alpha, value);
      ContrastOutcome outcome;
      outcome.id = contrast.id;
      outcome.role = role;
      outcome.covered = ci.covers(value);
      outcome.ci_width = ci.ci_high - ci.ci_low;
      outcome.point = ci.point;
      outcome.truth = value;
      outcome.p_value = ci.p_value.value_or(1.0);
      rec.contrasts.push_back(std::move(outcome));
    }
    const RemainderReport remainder = debias_remainder_bound(
        est, debias, asphericity_upper_bound(atoms, truth), design, std::optional<Vector>(truth.parameter));
    rec.remainder_bound = remainder.bound;
    rec.remainder_realized = remainder.realized;
  }
  rec.runtime_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return rec;
}

std::vector<ExperimentRecord> run_all(const ExperimentConfig& config, bool coverage) {
  config.validate();
  const std::vector<GridPoint> grid = config.grid();
  const Index reps = config.replicates;
  const Index total = static_cast<Index>(grid.size()) * reps;
  std::vector<ExperimentRecord> records(static_cast<std::size_t>(total));
  parallel_for(total, config.threads, [&](Index item) {
    const Index g = item / reps;
    const Index r = item % reps;
    records[static_cast<std::size_t>(item)] = run_replicate(config, g, grid[static_cast<std::size_t>(g)], r, coverage);
  });
  return records;
}

}  // namespace

ReplicateProblem simulate_replicate(const ExperimentConfig& config, Index grid_index, Index replicate) {
  config.validate();
  const std::vector<GridPoint> grid = config.grid();
  if (grid_index < 0 || grid_index >= static_cast<Index>(grid.size())) {
    throw ConfigError("grid index " + std::to_string(grid_index) + " out of range");
  }
  if (replicate < 0) throw ConfigError("replicate index must be >= 0");
  return simulate_point(config, grid_index, grid[static_cast<std::size_t>(grid_index)], replicate);
}

std::vector<ExperimentRecord> run_estimation_experiment(const ExperimentConfig& config) {
  return run_all(config, false);
}

std::vector<ExperimentRecord> run_coverage_experiment(const ExperimentConfig& config) {
  return run_all(config, true);
}

std::vector<ExperimentRecord> run_experiment(const ExperimentConfig& config) {
  return config.experiment == ExperimentKind::kCoverage ? run_coverage_experiment(config)
                                                        : run_estimation_experiment(config);
}

double median(std::vector<double> values) {
  if (values.empty()) throw std::invalid_argument("median of an empty set");
  std::sort(values.begin(), values.end());
  const std::size_t mid = values.size() / 2;
  return values.size() % 2 == 1 ? values[mid] : 0.5 * (values[mid - 1] + values[mid]);
}

std::vector<GridSummary> summarize(const std::vector<ExperimentRecord>& records) {
  std::map<Index, std::vector<const ExperimentRecord*>> groups;
  for (const ExperimentRecord& r : records) groups[r.grid_index].push_back(&r);
  std::vector<GridSummary> out;
  for (const auto& [index, rows] : groups) {
    GridSummary s;
    s.preset = rows.front()->preset;
    s.grid_index = index;
    s.n = rows.front()->n;
    s.p = rows.front()->p;
    s.complexity = rows.front()->complexity;
    s.replicates = static_cast<Index>(rows.size());
    std::vector<double> l2, atomic, prediction, lambda, width;
    std::map<std::string, std::pair<double, double>> cover;  // role -> (covered, total)
    std::map<std::string, double> width_sum;
    for (const ExperimentRecord* r : rows) {
      if (!r->converged) ++s.nonconverged;
      l2.push_back(r->l2_error);
      atomic.push_back(r->atomic_error);
      prediction.push_back(r->prediction_error);
      lambda.push_back(r->lambda);
      width.push_back(r->image_width);
      for (const ContrastOutcome& c : r->contrasts) {
        auto& [hit, count] = cover[c.role];
        hit += c.covered ? 1.0 : 0.0;
        count += 1.0;
        width_sum[c.role] += c.ci_width;
      }
    }
    s.median_l2_error = median(l2);
    s.median_atomic_error = median(atomic);
    s.median_prediction_error = median(prediction);
    s.median_lambda = median(lambda);
    s.median_image_width = median(width);
    for (const auto& [role, counts] : cover) {
      s.coverage[role] = counts.first / counts.second;
      s.mean_ci_width[role] = width_sum[role] / counts.second;
    }
    out.push_back(std::move(s));
  }
  return out;
}

RateFit fit_rate_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw std::invalid_argument("fit_rate_slope: x and y differ in length");
  if (x.size() < 3) throw std::invalid_argument("fit_rate_slope: need at least 3 grid points");
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0)) throw std::invalid_argument("fit_rate_slope: values must be positive");
    lx.push_back(std::log(x[i]));
    ly.push_back(std::log(y[i]));
  }
  const double k = static_cast<double>(lx.size());
  const double mx = std::accumulate(lx.begin(), lx.end(), 0.0) / k;
  const double my = std::accumulate(ly.begin(), ly.end(), 0.0) / k;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
    syy += (ly[i] - my) * (ly[i] - my);
  }
  if (sxx <= 0.0) throw std::invalid_argument("fit_rate_slope: degenerate grid (all x equal)");
  RateFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  const double ss_res = std::max(syy - fit.slope * sxy, 0.0);
  fit.r_squared = syy > 0.0 ? 1.0 - ss_res / syy : 1.0;
  return fit;
}

RateFit fit_rate_slope(const std::vector<GridSummary>& summaries) {
  std::vector<double> x, y;
  for (const GridSummary& s : summaries) {
    x.push_back(static_cast<double>(s.n));
    y.push_back(s.median_l2_error);
  }
  return fit_rate_slope(x, y);
}

double nonconverged_fraction(const std::vector<ExperimentRecord>& records) {
  if (records.empty()) return 0.0;
  const auto failed = std::count_if(records.begin(), records.end(), [](const ExperimentRecord& r) { return !r.converged; });
  return static_cast<double>(failed) / static_cast<double>(records.size());
}

}  // namespace atomicinv
