#pragma once

#include "atomicinv/atoms.hpp"
#include "atomicinv/experiment.hpp"
#include "atomicinv/geometry.hpp"
#include "atomicinv/inference.hpp"
#include "atomicinv/model.hpp"
#include "atomicinv/solver.hpp"

#include <nlohmann/json.hpp>

namespace atomicinv {

using Json = nlohmann::json;

// JSON encodings. Readers throw ConfigError on missing or ill-typed fields.

Json to_json(const Shape& shape);
Shape shape_from_json(const Json& j);

/// {"family": "sparse", "shape": {...}}
Json to_json(const AtomSet& atoms);
AtomSet atom_set_from_json(const Json& j);

/// {"n", "p", "shape", "sigma", "design": row-major rows, "y", "truth"?}
Json to_json(const ProblemInstance& problem);
ProblemInstance problem_from_json(const Json& j);

Json to_json(const SolverConfig& config);
/// Overrides the fields present in `j` on top of `base`.
SolverConfig solver_config_from_json(const Json& j, SolverConfig base = {});

Json to_json(const EstimateResult& result);
EstimateResult estimate_from_json(const Json& j);
Json to_json(const LambdaEstimate& estimate);
Json to_json(const FeasibilityReport& report);

Json to_json(const DebiasMatrix& debias);
DebiasMatrix debias_from_json(const Json& j);
Json to_json(const InferenceResult& result);

/// Every estimate carries samples, stderr and bias_direction.
Json to_json(const McEstimate& estimate);
Json to_json(const ConeDiagnostics& diagnostics);
Json to_json(const BoundReport& report);

Json to_json(const ExperimentConfig& config);
/// Starts from the preset named in `j` (custom when absent) and applies the
/// remaining fields. Unknown keys are rejected.
ExperimentConfig experiment_config_from_json(const Json& j);

Json to_json(const ExperimentRecord& record);
ExperimentRecord record_from_json(const Json& j);
Json to_json(const GridSummary& summary);
Json to_json(const RateFit& fit);

Json to_json(const Vector& v);
Vector vector_from_json(const Json& j);

}  // namespace atomicinv
