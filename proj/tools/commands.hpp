#pragma once

#include "atomicinv/experiment.hpp"

#include <optional>
#include <string>
#include <vector>

namespace atomicinv::cli {

enum ExitCode : int { kOk = 0, kConfig = 2, kNonConvergence = 3, kIo = 4 };

/// Flags shared by every subcommand; unset flags leave the config value.
struct CommonOptions {
  std::string config_path;
  std::optional<std::string> preset;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::string format = "json";
  std::optional<int> replicates;
  std::optional<unsigned> threads;
};

/// defaults < preset < config file < flags.
ExperimentConfig load_config(const CommonOptions& common);

struct ProblemOptions {
  std::string problem_path;
  std::optional<std::string> family;
  Index grid_index = 0;
  Index replicate = 0;
  std::optional<double> lambda;
  bool save_problem = false;
};

struct InferOptions {
  std::vector<std::string> contrasts;
  std::optional<double> null_value;
  std::optional<double> alpha;
};

struct GeometryOptions {
  std::string width_method = "sampled";
  Index width_samples = 1000;
  Index grid_index = 0;
  Index replicate = 0;
};

struct ReportOptions {
  std::string records_path;
};

int run_estimate(const CommonOptions& common, const ProblemOptions& problem);
int run_debias(const CommonOptions& common, const ProblemOptions& problem);
int run_infer(const CommonOptions& common, const ProblemOptions& problem, const InferOptions& infer);
int run_geometry(const CommonOptions& common, const GeometryOptions& geometry);
int run_simulate(const CommonOptions& common, bool plotdata);
int run_report(const CommonOptions& common, const ReportOptions& report);

/// Parses "e<i>" and "e<a>+e<b>" contrast ids (0-based).
Contrast parse_contrast(const std::string& id, Index p);

}  // namespace atomicinv::cli
