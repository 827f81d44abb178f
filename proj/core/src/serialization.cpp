#include "atomicinv/serialization.hpp"

#include <set>

namespace atomicinv {

namespace {

const Json& field(const Json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) throw ConfigError(std::string("missing field '") + key + "'");
  return j.at(key);
}

template <typename T>
T get(const Json& j, const char* key) {
  try {
    return field(j, key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("field '") + key + "': " + e.what());
  }
}

template <typename T>
std::optional<T> get_optional(const Json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return get<T>(j, key);
}

Json optional_json(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

}  // namespace

Json to_json(const Vector& v) { return Json(std::vector<double>(v.data(), v.data() + v.size())); }

Vector vector_from_json(const Json& j) {
  if (!j.is_array()) throw ConfigError("expected a numeric array");
  Vector v(static_cast<Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw ConfigError("expected a numeric array");
    v(static_cast<Index>(i)) = j[i].get<double>();
  }
  return v;
}

Json to_json(const Shape& shape) {
  return {{"kind", shape.is_matrix() ? "matrix" : "vector"}, {"rows", shape.rows}, {"cols", shape.cols}};
}

Shape shape_from_json(const Json& j) {
  const std::string kind = get<std::string>(j, "kind");
  if (kind == "vector") return Shape::vector(get<Index>(j, "rows"));
  if (kind == "matrix") return Shape::matrix(get<Index>(j, "rows"), get<Index>(j, "cols"));
  throw ConfigError("shape kind must be 'vector' or 'matrix'");
}

Json to_json(const AtomSet& atoms) {
  return {{"family", std::string(to_string(atoms.family()))}, {"shape", to_json(atoms.shape())}};
}

AtomSet atom_set_from_json(const Json& j) {
  try {
    return AtomSet(parse_atom_family(get<std::string>(j, "family")), shape_from_json(field(j, "shape")));
  } catch (const ConfigError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

Json to_json(const ProblemInstance& problem) {
  Json design = Json::array();
  const Matrix& x = problem.design.matrix();
  for (Index i = 0; i < x.rows(); ++i) design.push_back(to_json(Vector(x.row(i).transpose())));
  Json j = {{"n", problem.n()},
            {"p", problem.p()},
            {"shape", to_json(problem.shape)},
            {"sigma", problem.noise_level},
            {"design", std::move(design)},
            {"y", to_json(problem.observation)}};
  if (problem.truth) j["truth"] = to_json(*problem.truth);
  return j;
}

ProblemInstance problem_from_json(const Json& j) {
  const Index n = get<Index>(j, "n");
  const Index p = get<Index>(j, "p");
  const Json& rows = field(j, "design");
  if (!rows.is_array() || static_cast<Index>(rows.size()) != n) throw ConfigError("design must have n rows");
  Matrix x(n, p);
  for (Index i = 0; i < n; ++i) {
    const Vector row = vector_from_json(rows[static_cast<std::size_t>(i)]);
    if (row.size() != p) throw ConfigError("design row " + std::to_string(i) + " must have p entries");
    x.row(i) = row.transpose();
  }
  ProblemInstance problem;
  try {
    problem.design = DesignOperator(std::move(x));
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  problem.observation = vector_from_json(field(j, "y"));
  problem.noise_level = get<double>(j, "sigma");
  problem.shape = j.contains("shape") ? shape_from_json(j.at("shape")) : Shape::vector(p);
  if (j.contains("truth") && !j.at("truth").is_null()) problem.truth = vector_from_json(j.at("truth"));
  try {
    problem.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return problem;
}

Json to_json(const SolverConfig& c) {
  return {{"max_iterations", c.max_iterations}, {"eps_primal", c.eps_primal}, {"eps_dual", c.eps_dual},
          {"rho", c.rho},                       {"adaptive_rho", c.adaptive_rho}, {"relaxation", c.relaxation},
          {"anderson_memory", c.anderson_memory}};
}

SolverConfig solver_config_from_json(const Json& j, SolverConfig base) {
  if (!j.is_object()) throw ConfigError("solver config must be an object");
  static const std::set<std::string> known = {"max_iterations", "eps_primal", "eps_dual",
                                              "rho",            "adaptive_rho", "relaxation",
                                              "anderson_memory"};
  for (const auto& [key, value] : j.items()) {
    if (!known.contains(key)) throw ConfigError("unknown solver field '" + key + "'");
  }
  if (j.contains("max_iterations")) base.max_iterations = get<int>(j, "max_iterations");
  if (j.contains("eps_primal")) base.eps_primal = get<double>(j, "eps_primal");
  if (j.contains("eps_dual")) base.eps_dual = get<double>(j, "eps_dual");
  if (j.contains("rho")) base.rho = get<double>(j, "rho");
  if (j.contains("adaptive_rho")) base.adaptive_rho = get<bool>(j, "adaptive_rho");
  if (j.contains("relaxation")) base.relaxation = get<double>(j, "relaxation");
  if (j.contains("anderson_memory")) base.anderson_memory = get<int>(j, "anderson_memory");
  try {
    base.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return base;
}

Json to_json(const EstimateResult& r) {
  return {{"estimate", to_json(r.estimate)},
          {"lambda", r.lambda},
          {"residual_dual_norm", r.residual_dual_norm},
          {"atomic_norm_value", r.atomic_norm_value},
          {"iterations", r.iterations},
          {"converged", r.converged},
          {"primal_residual", r.primal_residual},
          {"dual_residual", r.dual_residual},
          {"final_rho", r.final_rho},
          {"rank_deficient", r.rank_deficient}};
}

EstimateResult estimate_from_json(const Json& j) {
  EstimateResult r;
  r.estimate = vector_from_json(field(j, "estimate"));
  r.lambda = get<double>(j, "lambda");
  r.residual_dual_norm = get_optional<double>(j, "residual_dual_norm").value_or(0.0);
  r.atomic_norm_value = get_optional<double>(j, "atomic_norm_value").value_or(0.0);
  r.iterations = get_optional<int>(j, "iterations").value_or(0);
  r.converged = get_optional<bool>(j, "converged").value_or(false);
  r.primal_residual = get_optional<double>(j, "primal_residual").value_or(0.0);
  r.dual_residual = get_optional<double>(j, "dual_residual").value_or(0.0);
  r.final_rho = get_optional<double>(j, "final_rho").value_or(0.0);
  r.rank_deficient = get_optional<bool>(j, "rank_deficient").value_or(false);
  return r;
}

Json to_json(const LambdaEstimate& e) {
  return {{"lambda", e.lambda},
          {"image_width", {{"estimate", e.image_width}, {"stderr", e.image_width_stderr}, {"samples", e.mc_samples},
                           {"bias_direction", "none"}}},
          {"max_atom_image_norm", e.max_atom_image_norm},
          {"delta", e.delta}};
}

Json to_json(const FeasibilityReport& r) {
  Json j = {{"residual_dual_norm", r.residual_dual_norm}, {"lambda", r.lambda}, {"feasible", r.feasible}};
  j["truth_gap"] = optional_json(r.truth_gap);
  j["truth_gap_within_2lambda"] = r.truth_gap_within_2lambda ? Json(*r.truth_gap_within_2lambda) : Json(nullptr);
  return j;
}

Json to_json(const DebiasMatrix& d) {
  Json rows = Json::array();
  for (Index i = 0; i < d.omega.rows(); ++i) rows.push_back(to_json(Vector(d.omega.row(i).transpose())));
  return {{"mode", std::string(to_string(d.mode))},
          {"eta", d.eta},
          {"omega", std::move(rows)},
          {"row_residuals", to_json(d.row_residuals)},
          {"row_converged", d.row_converged},
          {"used_inverse", d.used_inverse}};
}

DebiasMatrix debias_from_json(const Json& j) {
  DebiasMatrix d;
  try {
    d.mode = parse_debias_mode(get<std::string>(j, "mode"));
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  d.eta = get<double>(j, "eta");
  const Json& rows = field(j, "omega");
  if (!rows.is_array()) throw ConfigError("omega must be an array of rows");
  const Index p = static_cast<Index>(rows.size());
  d.omega.resize(p, p);
  for (Index i = 0; i < p; ++i) {
    const Vector row = vector_from_json(rows[static_cast<std::size_t>(i)]);
    if (row.size() != p) throw ConfigError("omega must be square");
    d.omega.row(i) = row.transpose();
  }
  d.row_residuals = j.contains("row_residuals") ? vector_from_json(j.at("row_residuals")) : Vector::Zero(p);
  d.row_converged = j.contains("row_converged") ? get<std::vector<bool>>(j, "row_converged")
                                                : std::vector<bool>(static_cast<std::size_t>(p), true);
  d.used_inverse = get_optional<bool>(j, "used_inverse").value_or(false);
  return d;
}

Json to_json(const InferenceResult& r) {
  return {{"contrast_id", r.contrast_id},
          {"contrast", to_json(r.contrast)},
          {"point", r.point},
          {"variance_factor", r.variance_factor},
          {"ci_low", r.ci_low},
          {"ci_high", r.ci_high},
          {"alpha", r.alpha},
          {"null_value", optional_json(r.null_value)},
          {"z", optional_json(r.z_statistic)},
          {"p_value", optional_json(r.p_value)},
          {"eta", r.eta},
          {"lambda", r.lambda},
          {"warnings", r.warnings}};
}

Json to_json(const McEstimate& e) {
  return {{"estimate", e.estimate},
          {"stderr", e.std_error},
          {"samples", e.samples},
          {"bias_direction", std::string(to_string(e.bias))}};
}

Json to_json(const ConeDiagnostics& d) {
  Json j;
  j["n"] = d.n;
  j["p"] = d.p;
  j["width"] = to_json(d.width);
  j["sudakov"] = {{"estimate", d.sudakov.value},
                  {"epsilon", d.sudakov.epsilon},
                  {"samples", d.sudakov.budget},
                  {"stderr", nullptr},
                  {"bias_direction", "lower"},
                  {"grid", d.sudakov.grid},
                  {"packing", d.sudakov.packing}};
  if (d.volume) {
    j["volume_ratio"] = {{"estimate", d.volume->value},
                         {"stderr", d.volume->std_error},
                         {"samples", d.volume->samples},
                         {"fraction", d.volume->fraction},
                         {"bias_direction", "none"}};
  } else {
    j["volume_ratio"] = nullptr;
  }
  j["phi"] = {{"estimate", d.isometry.phi}, {"samples", d.isometry.samples}, {"stderr", nullptr},
              {"bias_direction", "upper"}};
  j["psi"] = {{"estimate", d.isometry.psi}, {"samples", d.isometry.samples}, {"stderr", nullptr},
              {"bias_direction", "lower"}};
  j["gamma"] = to_json(d.gamma);
  j["gamma"]["stderr"] = nullptr;
  j["gamma_bound"] = d.gamma_bound;
  j["atom_width"] = to_json(d.atom_width);
  j["image_width"] = to_json(d.image_width);
  j["delta"] = d.delta;
  return j;
}

Json to_json(const BoundReport& r) {
  return {{"upper", r.upper},
          {"lower", r.lower},
          {"min_n", r.min_n},
          {"upp_link", {{"lhs", r.upp_link_lhs}, {"rhs", r.upp_link_rhs}, {"holds", r.upp_link_holds}}},
          {"constants", {{"c", r.constants.c}, {"c0", r.constants.c0}}}};
}

Json to_json(const ExperimentConfig& c) {
  Json dims = {{"n", c.n_values}, {"complexity", c.complexity}};
  switch (c.family) {
    case AtomFamily::kSparse:
    case AtomFamily::kSign: dims["p"] = c.shape.size(); break;
    case AtomFamily::kLowRank:
      dims["p1"] = c.shape.rows;
      dims["p2"] = c.shape.cols;
      break;
    case AtomFamily::kOrthogonal: dims["m"] = c.shape.rows; break;
  }
  return {{"experiment", std::string(to_string(c.experiment))},
          {"preset", std::string(to_string(c.preset))},
          {"family", std::string(to_string(c.family))},
          {"dimensions", std::move(dims)},
          {"sigma", c.sigma},
          {"replicates", c.replicates},
          {"alpha", c.alpha},
          {"seed", c.seed},
          {"out", c.out_dir},
          {"solver", to_json(c.solver)},
          {"mc_samples", c.mc_samples},
          {"delta", optional_json(c.delta)},
          {"lambda_override", optional_json(c.lambda_override)},
          {"debias_mode", std::string(to_string(c.debias_mode))},
          {"eta", optional_json(c.eta)},
          {"contrasts", std::string(to_string(c.contrasts))},
          {"threads", c.threads},
          {"max_failure_fraction", c.max_failure_fraction}};
}

ExperimentConfig experiment_config_from_json(const Json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  static const std::set<std::string> known = {
      "experiment", "preset",          "family",      "dimensions", "sigma",     "replicates",
      "alpha",      "seed",            "out",         "solver",     "mc_samples", "delta",
      "lambda_override", "debias_mode", "eta",        "contrasts",  "threads",   "max_failure_fraction"};
  for (const auto& [key, value] : j.items()) {
    if (!known.contains(key)) throw ConfigError("unknown config field '" + key + "'");
  }
  const Preset preset = j.contains("preset") ? parse_preset(get<std::string>(j, "preset")) : Preset::kCustom;
  ExperimentConfig c = preset_config(preset);
  if (j.contains("experiment")) c.experiment = parse_experiment_kind(get<std::string>(j, "experiment"));
  if (j.contains("family")) {
    try {
      c.family = parse_atom_family(get<std::string>(j, "family"));
    } catch (const ConfigError&) {
      throw;
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
  }
  if (j.contains("dimensions")) {
    const Json& d = j.at("dimensions");
    if (!d.is_object()) throw ConfigError("dimensions must be an object");
    if (d.contains("n")) c.n_values = get<std::vector<Index>>(d, "n");
    if (d.contains("complexity")) c.complexity = get<Index>(d, "complexity");
    if (d.contains("p")) c.shape = Shape::vector(get<Index>(d, "p"));
    if (d.contains("p1") || d.contains("p2")) c.shape = Shape::matrix(get<Index>(d, "p1"), get<Index>(d, "p2"));
    if (d.contains("m")) c.shape = Shape::matrix(get<Index>(d, "m"), get<Index>(d, "m"));
    if (!d.contains("complexity") && (c.family == AtomFamily::kSign || c.family == AtomFamily::kOrthogonal)) {
      c.complexity = c.family == AtomFamily::kSign ? c.shape.size() : c.shape.rows;
    }
  }
  if (j.contains("sigma")) c.sigma = get<double>(j, "sigma");
  if (j.contains("replicates")) c.replicates = get<int>(j, "replicates");
  if (j.contains("alpha")) c.alpha = get<double>(j, "alpha");
  if (j.contains("seed")) c.seed = get<std::uint64_t>(j, "seed");
  if (j.contains("out")) c.out_dir = get<std::string>(j, "out");
  if (j.contains("solver")) c.solver = solver_config_from_json(j.at("solver"), c.solver);
  if (j.contains("mc_samples")) c.mc_samples = get<Index>(j, "mc_samples");
  c.delta = j.contains("delta") ? get_optional<double>(j, "delta") : c.delta;
  c.lambda_override = j.contains("lambda_override") ? get_optional<double>(j, "lambda_override") : c.lambda_override;
  if (j.contains("debias_mode")) {
    try {
      c.debias_mode = parse_debias_mode(get<std::string>(j, "debias_mode"));
    } catch (const ConfigError&) {
      throw;
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
  }
  c.eta = j.contains("eta") ? get_optional<double>(j, "eta") : c.eta;
  if (j.contains("contrasts")) c.contrasts = parse_contrast_set(get<std::string>(j, "contrasts"));
  if (j.contains("threads")) c.threads = get<unsigned>(j, "threads");
  if (j.contains("max_failure_fraction")) c.max_failure_fraction = get<double>(j, "max_failure_fraction");
  c.validate();
  return c;
}

Json to_json(const ExperimentRecord& r) {
  Json contrasts = Json::array();
  for (const ContrastOutcome& c : r.contrasts) {
    contrasts.push_back({{"id", c.id},
                         {"role", c.role},
                         {"covered", c.covered},
                         {"ci_width", c.ci_width},
                         {"point", c.point},
                         {"truth", c.truth},
                         {"p_value", c.p_value}});
  }
  return {{"preset", r.preset},
          {"n", r.n},
          {"p", r.p},
          {"complexity", r.complexity},
          {"grid_index", r.grid_index},
          {"replicate", r.replicate},
          {"seed", r.seed},
          {"l2_error", r.l2_error},
          {"atomic_error", r.atomic_error},
          {"prediction_error", r.prediction_error},
          {"lambda", r.lambda},
          {"eta", r.eta},
          {"converged", r.converged},
          {"iterations", r.iterations},
          {"image_width", r.image_width},
          {"contrasts", std::move(contrasts)},
          {"remainder_realized", optional_json(r.remainder_realized)},
          {"remainder_bound", optional_json(r.remainder_bound)},
          {"runtime_ms", r.runtime_ms}};
}

ExperimentRecord record_from_json(const Json& j) {
  ExperimentRecord r;
  r.preset = get<std::string>(j, "preset");
  r.n = get<Index>(j, "n");
  r.p = get<Index>(j, "p");
  r.complexity = get<Index>(j, "complexity");
  r.grid_index = get<Index>(j, "grid_index");
  r.replicate = get<Index>(j, "replicate");
  r.seed = get<std::uint64_t>(j, "seed");
  r.l2_error = get<double>(j, "l2_error");
  r.atomic_error = get<double>(j, "atomic_error");
  r.prediction_error = get<double>(j, "prediction_error");
  r.lambda = get<double>(j, "lambda");
  r.eta = get<double>(j, "eta");
  r.converged = get<bool>(j, "converged");
  r.iterations = get<int>(j, "iterations");
  r.image_width = get<double>(j, "image_width");
  for (const Json& c : field(j, "contrasts")) {
    r.contrasts.push_back({get<std::string>(c, "id"), get<std::string>(c, "role"), get<bool>(c, "covered"),
                           get<double>(c, "ci_width"), get<double>(c, "point"), get<double>(c, "truth"),
                           get<double>(c, "p_value")});
  }
  r.remainder_realized = get_optional<double>(j, "remainder_realized");
  r.remainder_bound = get_optional<double>(j, "remainder_bound");
  r.runtime_ms = get<double>(j, "runtime_ms");
  return r;
}

Json to_json(const GridSummary& s) {
  return {{"preset", s.preset},
          {"grid_index", s.grid_index},
          {"n", s.n},
          {"p", s.p},
          {"complexity", s.complexity},
          {"replicates", s.replicates},
          {"nonconverged", s.nonconverged},
          {"median_l2_error", s.median_l2_error},
          {"median_atomic_error", s.median_atomic_error},
          {"median_prediction_error", s.median_prediction_error},
          {"median_lambda", s.median_lambda},
          {"median_image_width", s.median_image_width},
          {"coverage", s.coverage},
          {"mean_ci_width", s.mean_ci_width}};
}

Json to_json(const RateFit& fit) {
  return {{"slope", fit.slope}, {"intercept", fit.intercept}, {"r_squared", fit.r_squared}};
}

}  // namespace atomicinv
