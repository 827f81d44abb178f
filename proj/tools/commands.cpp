#include "commands.hpp"

#include "atomicinv/cone.hpp"
#include "atomicinv/csv.hpp"
#include "atomicinv/geometry.hpp"
#include "atomicinv/serialization.hpp"

#include <filesystem>
#include <iostream>
#include <map>

namespace atomicinv::cli {

namespace fs = std::filesystem;

namespace {

Json read_json(const fs::path& path) {
  const std::string text = read_file(path);
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ConfigError("'" + path.string() + "' is not valid JSON: " + e.what());
  }
}

void flatten(const Json& j, const std::string& prefix, std::vector<std::vector<std::string>>& rows) {
  if (j.is_object()) {
    for (const auto& [key, value] : j.items()) flatten(value, prefix.empty() ? key : prefix + "." + key, rows);
  } else if (j.is_array()) {
    for (std::size_t i = 0; i < j.size(); ++i) flatten(j[i], prefix + "." + std::to_string(i), rows);
  } else if (j.is_number_float()) {
    rows.push_back({prefix, format_double(j.get<double>())});
  } else if (j.is_string()) {
    rows.push_back({prefix, j.get<std::string>()});
  } else {
    rows.push_back({prefix, j.dump()});
  }
}

/// JSON as-is, or a two-column key,value CSV of the flattened document.
fs::path write_document(const Json& j, const fs::path& dir, const std::string& stem, ExportFormat format) {
  fs::path path = dir / (stem + (format == ExportFormat::kJson ? ".json" : ".csv"));
  if (format == ExportFormat::kJson) {
    write_file_atomic(path, j.dump(2) + "\n");
  } else {
    std::vector<std::vector<std::string>> rows;
    flatten(j, "", rows);
    std::string text = csv_row({"key", "value"});
    for (const auto& row : rows) text += csv_row(row);
    write_file_atomic(path, text);
  }
  std::cout << "wrote " << path.string() << "\n";
  return path;
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory '" + dir.string() + "': " + ec.message());
}

struct LoadedProblem {
  ExperimentConfig config;
  AtomSet atoms;
  ProblemInstance problem;
  std::optional<Vector> truth;
};

LoadedProblem load_problem(const CommonOptions& common, const ProblemOptions& opts) {
  ExperimentConfig config = load_config(common);
  if (opts.family) config.family = parse_atom_family(*opts.family);
  if (!opts.problem_path.empty()) {
    ProblemInstance problem = problem_from_json(read_json(opts.problem_path));
    AtomSet atoms(config.family, problem.shape);
    std::optional<Vector> truth = problem.truth;
    return {config, atoms, std::move(problem), truth};
  }
  ReplicateProblem sim = simulate_replicate(config, opts.grid_index, opts.replicate);
  AtomSet atoms(config.family, sim.problem.shape);
  if (opts.save_problem) {
    ensure_dir(config.out_dir);
    write_file_atomic(fs::path(config.out_dir) / "problem.json", to_json(sim.problem).dump(2) + "\n");
    std::cout << "wrote " << (fs::path(config.out_dir) / "problem.json").string() << "\n";
  }
  return {config, atoms, std::move(sim.problem), sim.truth.parameter};
}

std::pair<double, Json> tune_lambda(const LoadedProblem& lp, const ProblemOptions& opts) {
  if (opts.lambda) return {*opts.lambda, Json{{"source", "flag"}, {"lambda", *opts.lambda}}};
  if (lp.config.lambda_override) {
    return {*lp.config.lambda_override, Json{{"source", "config"}, {"lambda", *lp.config.lambda_override}}};
  }
  LambdaOptions options;
  options.mc_samples = lp.config.mc_samples;
  options.delta = lp.config.delta;
  options.seed = derive_seed(lp.config.seed, {3});
  options.threads = lp.config.threads;
  const LambdaEstimate est = compute_lambda(lp.problem.design, lp.atoms, lp.problem.noise_level, options);
  Json j = to_json(est);
  j["source"] = "compute_lambda";
  return {est.lambda, j};
}

DebiasMatrix make_debias(const LoadedProblem& lp) {
  DebiasOptions options;
  options.mode = lp.config.debias_mode;
  options.eta_target = lp.config.eta;
  options.threads = lp.config.threads;
  return solve_debias_matrix(lp.problem.design, lp.atoms, options);
}

void report_convergence(const EstimateResult& est) {
  std::cout << "lambda=" << format_double(est.lambda) << " iterations=" << est.iterations
            << " converged=" << (est.converged ? "yes" : "no")
            << " residual_dual_norm=" << format_double(est.residual_dual_norm) << "\n";
}

}  // namespace

ExperimentConfig load_config(const CommonOptions& common) {
  Json j = Json::object();
  if (!common.config_path.empty()) j = read_json(common.config_path);
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  if (common.preset) j["preset"] = *common.preset;
  if (common.seed) j["seed"] = *common.seed;
  if (common.replicates) j["replicates"] = *common.replicates;
  if (common.out) j["out"] = *common.out;
  if (common.threads) j["threads"] = *common.threads;
  ExperimentConfig config = experiment_config_from_json(j);
  config.validate();
  return config;
}

Contrast parse_contrast(const std::string& id, Index p) {
  auto index = [&](const std::string& token) -> Index {
    if (token.size() < 2 || token[0] != 'e') throw ConfigError("bad contrast id '" + id + "'");
    std::size_t used = 0;
    long long value = -1;
    try {
      value = std::stoll(token.substr(1), &used);
    } catch (const std::exception&) {
      throw ConfigError("bad contrast id '" + id + "'");
    }
    if (used != token.size() - 1 || value < 0 || value >= p) {
      throw ConfigError("contrast id '" + id + "' out of range for p = " + std::to_string(p));
    }
    return static_cast<Index>(value);
  };
  const auto plus = id.find('+');
  if (plus == std::string::npos) return coordinate_contrast(p, index(id));
  const Index a = index(id.substr(0, plus));
  const Index b = index(id.substr(plus + 1));
  if (a == b) throw ConfigError("pair contrast '" + id + "' repeats a coordinate");
  return pair_contrast(p, a, b);
}

int run_estimate(const CommonOptions& common, const ProblemOptions& opts) {
  const LoadedProblem lp = load_problem(common, opts);
  const auto [lambda, lambda_json] = tune_lambda(lp, opts);
  const EstimateResult est = solve_constrained(lp.problem, lp.atoms, lambda, lp.config.solver);
  report_convergence(est);
  Json out{{"atoms", to_json(lp.atoms)}, {"lambda", lambda_json}, {"estimate", to_json(est)}};
  out["feasibility"] = to_json(verify_feasibility(lp.problem, lp.atoms, est.estimate, lambda));
  if (lp.truth) out["l2_error"] = (est.estimate - *lp.truth).norm();
  ensure_dir(lp.config.out_dir);
  write_document(out, lp.config.out_dir, "estimate", parse_export_format(common.format));
  return est.converged ? kOk : kNonConvergence;
}

int run_debias(const CommonOptions& common, const ProblemOptions& opts) {
  const LoadedProblem lp = load_problem(common, opts);
  const DebiasMatrix debias = make_debias(lp);
  std::cout << "mode=" << to_string(debias.mode) << " eta=" << format_double(debias.eta)
            << " all_converged=" << (debias.all_converged() ? "yes" : "no") << "\n";
  ensure_dir(lp.config.out_dir);
  write_document(to_json(debias), lp.config.out_dir, "debias", parse_export_format(common.format));
  return debias.all_converged() ? kOk : kNonConvergence;
}

int run_infer(const CommonOptions& common, const ProblemOptions& opts, const InferOptions& infer) {
  const LoadedProblem lp = load_problem(common, opts);
  const Index p = lp.atoms.dimension();
  std::vector<Contrast> contrasts;
  if (infer.contrasts.empty()) {
    for (Index i = 0; i < p; ++i) contrasts.push_back(coordinate_contrast(p, i));
  } else {
    for (const std::string& id : infer.contrasts) contrasts.push_back(parse_contrast(id, p));
  }
  const double alpha = infer.alpha.value_or(lp.config.alpha);
  const auto [lambda, lambda_json] = tune_lambda(lp, opts);
  const EstimateResult est = solve_constrained(lp.problem, lp.atoms, lambda, lp.config.solver);
  report_convergence(est);
  const DebiasMatrix debias = make_debias(lp);
  const Vector debiased = debiased_estimate(est, debias, lp.problem);

  std::vector<InferenceResult> results;
  for (const Contrast& c : contrasts) {
    InferenceResult r = confidence_interval(debiased, debias, lp.problem.design, lp.problem.noise_level, c, alpha,
                                            infer.null_value.value_or(0.0));
    r.lambda = lambda;
    results.push_back(std::move(r));
  }
  ensure_dir(lp.config.out_dir);
  const ExportFormat format = parse_export_format(common.format);
  if (format == ExportFormat::kCsv) {
    const fs::path path = fs::path(lp.config.out_dir) / "inference.csv";
    write_file_atomic(path, inference_csv(results));
    std::cout << "wrote " << path.string() << "\n";
  } else {
    Json arr = Json::array();
    for (const auto& r : results) arr.push_back(to_json(r));
    write_document(Json{{"lambda", lambda_json}, {"eta", debias.eta}, {"results", arr}}, lp.config.out_dir,
                   "inference", format);
  }
  return est.converged && debias.all_converged() ? kOk : kNonConvergence;
}

int run_geometry(const CommonOptions& common, const GeometryOptions& opts) {
  const ExperimentConfig config = load_config(common);
  const ReplicateProblem sim = simulate_replicate(config, opts.grid_index, opts.replicate);
  const TangentCone cone(AtomSet(config.family, sim.problem.shape), sim.truth.parameter);
  DiagnosticsOptions options;
  options.width_samples = opts.width_samples;
  options.width_method =
      opts.width_method == "projection" ? ConeWidthMethod::kProjection : ConeWidthMethod::kSampled;
  if (opts.width_method != "projection" && opts.width_method != "sampled") {
    throw ConfigError("width method must be 'sampled' or 'projection'");
  }
  options.delta = config.delta;
  options.threads = config.threads;
  const ConeDiagnostics diag = diagnose_cone(sim.problem.design, cone, options, derive_seed(config.seed, {7}));
  const BoundReport bounds = evaluate_bounds(diag, config.sigma, diag.n);
  std::cout << "n=" << diag.n << " p=" << diag.p << " width=" << format_double(diag.width.estimate)
            << " gamma=" << format_double(diag.gamma.estimate) << " upper=" << format_double(bounds.upper)
            << " min_n=" << format_double(bounds.min_n) << "\n";
  ensure_dir(config.out_dir);
  write_document(Json{{"preset", std::string(to_string(config.preset))},
                      {"diagnostics", to_json(diag)},
                      {"bounds", to_json(bounds)}},
                 config.out_dir, "geometry", parse_export_format(common.format));
  return kOk;
}

int run_simulate(const CommonOptions& common, bool plotdata) {
  const ExperimentConfig config = load_config(common);
  const std::vector<ExperimentRecord> records = run_experiment(config);
  const auto paths = export_results(records, config.out_dir, parse_export_format(common.format), plotdata);
  for (const auto& path : paths) std::cout << "wrote " << path.string() << "\n";
  const auto summaries = summarize(records);
  for (const GridSummary& s : summaries) {
    std::cout << "n=" << s.n << " median_l2_error=" << format_double(s.median_l2_error)
              << " nonconverged=" << s.nonconverged << "/" << s.replicates;
    for (const auto& [role, cov] : s.coverage) std::cout << " coverage[" << role << "]=" << format_double(cov);
    std::cout << "\n";
  }
  if (summaries.size() >= 3) {
    const RateFit fit = fit_rate_slope(summaries);
    std::cout << "slope=" << format_double(fit.slope) << " r2=" << format_double(fit.r_squared) << "\n";
  }
  const double failed = nonconverged_fraction(records);
  if (failed > config.max_failure_fraction) {
    std::cerr << "non-converged fraction " << failed << " exceeds " << config.max_failure_fraction << "\n";
    return kNonConvergence;
  }
  return kOk;
}

int run_report(const CommonOptions& common, const ReportOptions& opts) {
  const fs::path out = common.out.value_or(fs::path(opts.records_path).parent_path().string());
  std::vector<ExperimentRecord> records;
  if (fs::path(opts.records_path).extension() == ".json") {
    const Json j = read_json(opts.records_path);
    if (!j.is_array()) throw ConfigError("records JSON must be an array");
    for (const Json& r : j) records.push_back(record_from_json(r));
  } else {
    records = read_records_csv(opts.records_path);
  }
  if (records.empty()) throw ConfigError("'" + opts.records_path + "' holds no records");
  const auto summaries = summarize(records);
  ensure_dir(out);
  const std::map<std::string, std::string> files = {
      {"summary.csv", summaries_csv(summaries)},
      {"plot_error_vs_n.csv", error_vs_n_csv(summaries)},
      {"plot_coverage_vs_n.csv", coverage_vs_n_csv(summaries)},
      {"plot_width_vs_dimension.csv", width_vs_dimension_csv(summaries)},
  };
  for (const auto& [name, text] : files) {
    write_file_atomic(out / name, text);
    std::cout << "wrote " << (out / name).string() << "\n";
  }
  if (summaries.size() >= 3) {
    Json fit = to_json(fit_rate_slope(summaries));
    write_file_atomic(out / "rate_fit.json", fit.dump(2) + "\n");
    std::cout << "slope=" << format_double(fit["slope"].get<double>()) << "\n";
  }
  std::cout << "determinism_hash=" << determinism_hash(records) << "\n";
  return kOk;
}

}  // namespace atomicinv::cli
