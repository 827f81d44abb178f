#include "commands.hpp"

#include "atomicinv/csv.hpp"

#include <CLI11.hpp>

#include <iostream>

using namespace atomicinv;
using namespace atomicinv::cli;

namespace {

void add_common(CLI::App* cmd, CommonOptions& common) {
  cmd->add_option("--config", common.config_path, "Experiment config JSON")->check(CLI::ExistingFile);
  cmd->add_option("--preset", common.preset, "cor1-sparse | cor2-lowrank | cor3-sign | cor4-orthogonal | custom");
  cmd->add_option("--seed", common.seed, "Master seed");
  cmd->add_option("--out", common.out, "Output directory");
  cmd->add_option("--format", common.format, "Output format")->check(CLI::IsMember({"csv", "json"}));
  cmd->add_option("--replicates", common.replicates, "Replicates per grid point")->check(CLI::PositiveNumber);
  cmd->add_option("--threads", common.threads, "Worker threads");
}

void add_problem(CLI::App* cmd, ProblemOptions& problem) {
  cmd->add_option("--problem", problem.problem_path, "Problem JSON (simulated from the config when absent)")
      ->check(CLI::ExistingFile);
  cmd->add_option("--family", problem.family, "sparse | low_rank | sign | orthogonal");
  cmd->add_option("--grid-index", problem.grid_index, "Grid point of the simulated problem");
  cmd->add_option("--replicate", problem.replicate, "Replicate index of the simulated problem");
  cmd->add_option("--lambda", problem.lambda, "Fixed tuning parameter");
  cmd->add_flag("--save-problem", problem.save_problem, "Write the simulated problem to problem.json");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Atomic-norm estimation, de-biased inference and cone geometry"};
  app.require_subcommand(1);

  CommonOptions common;
  ProblemOptions problem;
  InferOptions infer;
  GeometryOptions geometry;
  ReportOptions report;
  bool no_plotdata = false;

  auto* estimate = app.add_subcommand("estimate", "Solve the constrained atomic-norm program for one problem");
  add_common(estimate, common);
  add_problem(estimate, problem);

  auto* debias = app.add_subcommand("debias", "Compute the de-biasing matrix for one problem");
  add_common(debias, common);
  add_problem(debias, problem);

  auto* inf = app.add_subcommand("infer", "Confidence intervals and tests for linear contrasts");
  add_common(inf, common);
  add_problem(inf, problem);
  inf->add_option("--contrast", infer.contrasts, "Contrast ids such as e3 or e1+e4 (default: every coordinate)");
  inf->add_option("--null", infer.null_value, "Null value of every contrast (default 0)");
  inf->add_option("--alpha", infer.alpha, "Significance level");

  auto* geo = app.add_subcommand("geometry", "Cone diagnostics at a preset anchor");
  add_common(geo, common);
  geo->add_option("--width-method", geometry.width_method, "sampled | projection");
  geo->add_option("--width-samples", geometry.width_samples, "Monte-Carlo samples for the cone width");
  geo->add_option("--grid-index", geometry.grid_index, "Grid point supplying n and the anchor");
  geo->add_option("--replicate", geometry.replicate, "Replicate supplying the anchor and design");

  auto* simulate = app.add_subcommand("simulate", "Run an estimation or coverage experiment");
  add_common(simulate, common);
  simulate->add_flag("--no-plotdata", no_plotdata, "Skip the plot tables");

  auto* rep = app.add_subcommand("report", "Re-aggregate existing records");
  add_common(rep, common);
  rep->add_option("--records", report.records_path, "records.csv or records.json")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kConfig;
  }

  try {
    if (*estimate) return run_estimate(common, problem);
    if (*debias) return run_debias(common, problem);
    if (*inf) return run_infer(common, problem, infer);
    if (*geo) return run_geometry(common, geometry);
    if (*simulate) return run_simulate(common, !no_plotdata);
    if (*rep) return run_report(common, report);
  } catch (const IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return kIo;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return kOk;
}
