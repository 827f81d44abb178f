#pragma once

#include "atomicinv/atoms.hpp"
#include "atomicinv/inference.hpp"
#include "atomicinv/solver.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace atomicinv {

/// Invalid experiment configuration (maps to CLI exit code 2).
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class ExperimentKind { kEstimation, kCoverage };
enum class Preset { kCor1Sparse, kCor2LowRank, kCor3Sign, kCor4Orthogonal, kCustom };
enum class ContrastSet {
  /// Each support coordinate, one off-support coordinate, one 2-sparse pair.
  kDefault,
  /// Every coordinate e_1..e_p.
  kAllCoordinates,
};

std::string_view to_string(ExperimentKind kind);
std::string_view to_string(Preset preset);
std::string_view to_string(ContrastSet set);
ExperimentKind parse_experiment_kind(std::string_view name);
Preset parse_preset(std::string_view name);
ContrastSet parse_contrast_set(std::string_view name);

struct GridPoint {
  Index n = 0;
  Shape shape;
  /// Sparsity, rank, or the dimension tag for sign / orthogonal truths.
  Index complexity = 0;
};

struct ExperimentConfig {
  ExperimentKind experiment = ExperimentKind::kEstimation;
  Preset preset = Preset::kCustom;
  AtomFamily family = AtomFamily::kSparse;
  std::vector<Index> n_values;
  /// Vector length (sparse, sign), rows x cols (low rank) or m (orthogonal, rows == cols).
  Shape shape;
  Index complexity = 0;
  double sigma = 1.0;
  int replicates = 1;
  double alpha = 0.05;
  std::uint64_t seed = 0;
  std::string out_dir = "results";
  SolverConfig solver;
  Index mc_samples = 500;
  std::optional<double> delta;
  std::optional<double> lambda_override;
  DebiasMode debias_mode = DebiasMode::kMinimizeEta;
  std::optional<double> eta;
  ContrastSet contrasts = ContrastSet::kDefault;
  unsigned threads = 1;
  /// Non-converged fraction above which the run is reported as failing.
  double max_failure_fraction = 0.05;

  std::vector<GridPoint> grid() const;
  /// Throws ConfigError.
  void validate() const;
};

/// Defaults of a named preset (custom gives a small sparse problem).
ExperimentConfig preset_config(Preset preset);

struct ContrastOutcome {
  std::string id;
  /// "on_support", "off_support", "pair" or "coordinate"; summaries group by role.
  std::string role;
  bool covered = false;
  double ci_width = 0.0;
  double point = 0.0;
  double truth = 0.0;
  /// Two-sided p-value for H0: <v, M> = truth.
  double p_value = 1.0;

  friend bool operator==(const ContrastOutcome&, const ContrastOutcome&) = default;
};

struct ExperimentRecord {
  std::string preset;
  Index n = 0;
  Index p = 0;
  Index complexity = 0;
  Index grid_index = 0;
  Index replicate = 0;
  std::uint64_t seed = 0;
  double l2_error = 0.0;
  double atomic_error = 0.0;
  double prediction_error = 0.0;
  double lambda = 0.0;
  double eta = 0.0;
  bool converged = false;
  int iterations = 0;
  double image_width = 0.0;
  std::vector<ContrastOutcome> contrasts;
  std::optional<double> remainder_realized;
  std::optional<double> remainder_bound;
  /// Wall time of the replicate; excluded from determinism_hash.
  double runtime_ms = 0.0;

  friend bool operator==(const ExperimentRecord&, const ExperimentRecord&) = default;
};

/// Truth for one replicate of a grid point.
GroundTruth make_truth(AtomFamily family, const GridPoint& point, std::uint64_t seed);

struct ReplicateProblem {
  std::uint64_t seed = 0;
  GroundTruth truth;
  ProblemInstance problem;
};

/// The design, truth and observation of one replicate, exactly as the
/// experiment runners draw them.
ReplicateProblem simulate_replicate(const ExperimentConfig& config, Index grid_index, Index replicate);

/// Simulates, tunes lambda, solves and records the error triple for every
/// grid point x replicate. Solver failures are recorded, never thrown. Rows
/// come back ordered by (grid_index, replicate).
std::vector<ExperimentRecord> run_estimation_experiment(const ExperimentConfig& config);

/// Estimation plus de-biasing and confidence intervals for the contrast set.
std::vector<ExperimentRecord> run_coverage_experiment(const ExperimentConfig& config);

/// Dispatches on config.experiment.
std::vector<ExperimentRecord> run_experiment(const ExperimentConfig& config);

struct GridSummary {
  std::string preset;
  Index grid_index = 0;
  Index n = 0;
  Index p = 0;
  Index complexity = 0;
  Index replicates = 0;
  Index nonconverged = 0;
  double median_l2_error = 0.0;
  double median_atomic_error = 0.0;
  double median_prediction_error = 0.0;
  double median_lambda = 0.0;
  double median_image_width = 0.0;
  /// Per contrast role: empirical coverage and mean CI width.
  std::map<std::string, double> coverage;
  std::map<std::string, double> mean_ci_width;
};

/// One summary per grid point, ordered by grid_index.
std::vector<GridSummary> summarize(const std::vector<ExperimentRecord>& records);

double median(std::vector<double> values);

struct RateFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
};

/// Least-squares fit of log(y) on log(x). Needs >= 3 points with distinct x
/// and positive values; throws std::invalid_argument otherwise.
RateFit fit_rate_slope(const std::vector<double>& x, const std::vector<double>& y);
/// Fit of log median l2 error on log n over the grid summaries.
RateFit fit_rate_slope(const std::vector<GridSummary>& summaries);

/// Fraction of records with converged == false.
double nonconverged_fraction(const std::vector<ExperimentRecord>& records);

// Persistence.

std::string records_csv(const std::vector<ExperimentRecord>& records, bool include_runtime = true);
std::vector<ExperimentRecord> parse_records_csv(std::string_view text);
std::vector<ExperimentRecord> read_records_csv(const std::filesystem::path& path);

std::string summaries_csv(const std::vector<GridSummary>& summaries);
/// Tidy plot tables.
std::string error_vs_n_csv(const std::vector<GridSummary>& summaries);
std::string coverage_vs_n_csv(const std::vector<GridSummary>& summaries);
std::string width_vs_dimension_csv(const std::vector<GridSummary>& summaries);

/// FNV-1a (hex) of the records CSV without the runtime column.
std::string determinism_hash(const std::vector<ExperimentRecord>& records);

enum class ExportFormat { kCsv, kJson };
ExportFormat parse_export_format(std::string_view name);

/// Writes records (csv or json), summary.csv and, with plotdata, the
/// plot_*.csv tables into `dir`. Every file is written atomically. Throws
/// std::invalid_argument for an empty record set (nothing is written) and
/// IoError on file-system failures. Returns the written paths.
std::vector<std::filesystem::path> export_results(const std::vector<ExperimentRecord>& records,
                                                  const std::filesystem::path& dir, ExportFormat format,
                                                  bool plotdata);

}  // namespace atomicinv
