#pragma once

#include "atomicinv/cone.hpp"
#include "atomicinv/model.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string_view>
#include <vector>

namespace atomicinv {

/// Direction of the systematic bias of a sampled extremum.
enum class BiasDirection {
  kNone,   ///< unbiased Monte-Carlo mean
  kLower,  ///< estimate <= true value (sampled supremum / packing count)
  kUpper,  ///< estimate >= true value (sampled infimum)
};

std::string_view to_string(BiasDirection bias);

struct McEstimate {
  double estimate = 0.0;
  double std_error = 0.0;
  Index samples = 0;
  BiasDirection bias = BiasDirection::kNone;
};

/// Minimum Monte-Carlo draws accepted by every width estimator.
inline constexpr Index kMinMcSamples = 100;

/// w(K) = E sup_{v in K} <g, v> for g ~ N(0, I_dim), with `inner_sup(g)`
/// returning the inner supremum. Draw i uses the stream derive_seed(seed, {i});
/// the mean uses pairwise summation so results do not depend on `threads`.
McEstimate gaussian_width_mc(Index dim, const std::function<double(const Vector&)>& inner_sup, Index samples,
                             std::uint64_t seed, unsigned threads = 1);

/// E ||g||_2 for g ~ N(0, I_p): sqrt(2) Gamma((p+1)/2) / Gamma(p/2).
double chi_mean(Index p);

enum class ConeWidthMethod {
  /// Inner sup by multistart cone sampling plus membership-preserving ascent.
  kSampled,
  /// Inner sup as ||Pi_T(g)||_2 from the exact cone projection.
  kProjection,
};

struct ConeWidthOptions {
  Index mc_samples = 1000;
  int restarts = 200;
  int ascent_steps = 40;
  ConeWidthMethod method = ConeWidthMethod::kSampled;
  unsigned threads = 1;
};

/// w(B_2^p intersect T). The sampled method is a lower-biased estimate.
McEstimate tangent_cone_width(const TangentCone& cone, const ConeWidthOptions& options, std::uint64_t seed);

/// Best <g, h> over `restarts` unit cone samples, refined by an ascent that
/// only accepts steps passing the cone's descent test. Never exceeds the
/// exact value ||Pi_T(g)||_2 (up to the descent-test slack).
double sampled_cone_support(const TangentCone& cone, const Vector& g, int restarts, int ascent_steps, Rng& rng);

/// Uniform-radius point of B_2^p intersect T: cone direction times U^(1/p).
Vector sample_cone_ball_point(const TangentCone& cone, Rng& rng);

struct SudakovEstimate {
  /// max over the grid of eps * sqrt(log M(2 eps)). A lower bound.
  double value = 0.0;
  double epsilon = 0.0;
  Index budget = 0;
  std::vector<double> grid;
  /// Greedy packing count at radius 2 eps, aligned with `grid`.
  std::vector<Index> packing;
};

/// {2^-k : k = 0..6}.
std::vector<double> default_epsilon_grid();

/// Size of a greedy packing of `points` with pairwise distances > radius.
Index greedy_packing(const std::vector<Vector>& points, double radius);

SudakovEstimate sudakov_estimate(const std::function<Vector(Rng&)>& point_sampler, const std::vector<double>& grid,
                                 Index budget, std::uint64_t seed);

inline constexpr Index kMaxVolumeDimension = 8;

struct VolumeEstimate {
  double value = 0.0;
  double std_error = 0.0;
  double fraction = 0.0;
  Index samples = 0;
};

/// v = sqrt(p) * (vol(K) / vol(B_2^p))^(1/p) with the volume fraction estimated
/// by the hit rate of uniform ball samples; stderr by the delta method.
VolumeEstimate volume_ratio_mc(const std::function<bool(const Vector&)>& membership, Index p, Index samples,
                               std::uint64_t seed);

struct IsometryEstimate {
  /// Sampled min of ||X h||_2 over unit cone directions; >= the true phi.
  double phi = 0.0;
  /// Sampled max; <= the true psi.
  double psi = 0.0;
  Index samples = 0;
};

/// Sampling over mc_samples * restarts unit cone directions followed by
/// projected-gradient refinement of the extreme candidates.
IsometryEstimate local_isometry_constants(const DesignOperator& design, const TangentCone& cone, Index mc_samples,
                                          int restarts, std::uint64_t seed);

/// Running max of ||h||_A / ||h||_2 over cone samples, plus projected ascent
/// along a subgradient of ||.||_A. A lower bound on the asphericity ratio.
McEstimate empirical_asphericity(const TangentCone& cone, Index samples, std::uint64_t seed);

/// Gaussian width of the image atom set, E ||X^T g||_A^* with g ~ N(0, I_n).
/// The identity design gives w(A) = E ||g||_A^*.
McEstimate image_atom_width(const DesignOperator& design, const AtomSet& atoms, Index samples, std::uint64_t seed,
                            unsigned threads = 1);

struct DiagnosticsOptions {
  Index width_samples = 1000;
  int width_restarts = 200;
  ConeWidthMethod width_method = ConeWidthMethod::kSampled;
  Index atom_width_samples = 2000;
  Index sudakov_budget = 1000;
  Index volume_samples = 200000;
  Index isometry_samples = 200;
  int isometry_restarts = 5;
  Index asphericity_samples = 5000;
  /// Defaults to sqrt(2 log p).
  std::optional<double> delta;
  unsigned threads = 1;
};

struct ConeDiagnostics {
  Index n = 0;
  Index p = 0;
  McEstimate width;
  SudakovEstimate sudakov;
  std::optional<VolumeEstimate> volume;
  IsometryEstimate isometry;
  McEstimate gamma;
  /// Closed-form asphericity bound for the family.
  double gamma_bound = 0.0;
  McEstimate atom_width;
  McEstimate image_width;
  double delta = 0.0;
};

ConeDiagnostics diagnose_cone(const DesignOperator& design, const TangentCone& cone, const DiagnosticsOptions& options,
                              std::uint64_t seed);

/// Reporting constants for evaluate_bounds. The theory leaves them free.
struct BoundConstants {
  double c = 0.5;
  double c0 = 1.0;
};

struct BoundReport {
  /// 2 sigma / (1 - c)^2 * gamma * w(XA) / sqrt(n).
  double upper = 0.0;
  /// c0 sigma^2 / (1 + c)^2 * (max(e, v) / sqrt(n))^2.
  double lower = 0.0;
  /// 4 (w + delta)^2 / c^2.
  double min_n = 0.0;
  /// gamma * w(A) against w(B_2^p intersect T), with 3 joint standard errors.
  double upp_link_lhs = 0.0;
  double upp_link_rhs = 0.0;
  bool upp_link_holds = false;
  BoundConstants constants;
};

/// Throws std::invalid_argument when a required diagnostic is missing.
BoundReport evaluate_bounds(const ConeDiagnostics& diagnostics, double sigma, Index n, BoundConstants constants = {});

}  // namespace atomicinv
