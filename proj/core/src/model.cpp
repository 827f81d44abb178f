#include "atomicinv/model.hpp"

#include "atomicinv/linalg.hpp"
#include "atomicinv/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

namespace atomicinv {

DesignOperator::DesignOperator(Matrix entries, bool columns_standardized)
    : entries_(std::move(entries)), columns_standardized_(columns_standardized) {
  if (entries_.rows() < 1 || entries_.cols() < 1) {
    throw std::invalid_argument("DesignOperator: n and p must be at least 1");
  }
  if (!entries_.allFinite()) {
    throw std::invalid_argument("DesignOperator: entries must be finite");
  }
}

DesignOperator DesignOperator::identity(Index p) { return DesignOperator(Matrix::Identity(p, p)); }

Vector DesignOperator::apply(const Vector& v) const {
  require_size(v, cols(), "DesignOperator::apply");
  return entries_ * v;
}

Vector DesignOperator::adjoint(const Vector& w) const {
  require_size(w, rows(), "DesignOperator::adjoint");
  return entries_.transpose() * w;
}

Matrix DesignOperator::gram() const {
  Matrix g(cols(), cols());
  g.setZero();
  g.selfadjointView<Eigen::Lower>().rankUpdate(entries_.transpose());
  return g.selfadjointView<Eigen::Lower>();
}

DesignOperator DesignOperator::standardized() const {
  Matrix scaled = entries_;
  for (Index j = 0; j < scaled.cols(); ++j) {
    const double norm = scaled.col(j).norm();
    if (norm > 0.0) scaled.col(j) /= norm;
  }
  return DesignOperator(std::move(scaled), true);
}

DesignOperator gaussian_ensemble_design(Index n, Index p, std::uint64_t seed) {
  if (n < 1 || p < 1) throw std::invalid_argument("gaussian_ensemble_design: n and p must be >= 1");
  Rng rng(seed);
  Matrix x = rng.normal_matrix(n, p) / std::sqrt(static_cast<double>(n));
  return DesignOperator(std::move(x));
}

void ProblemInstance::validate() const {
  require_size(observation, design.rows(), "ProblemInstance observation");
  if (!(noise_level >= 0.0) || !std::isfinite(noise_level)) {
    throw std::invalid_argument("ProblemInstance: noise level must be finite and >= 0");
  }
  if (shape.size() != design.cols()) {
    throw DimensionError("ProblemInstance: shape " + to_string(shape) +
                         " does not match design columns " + std::to_string(design.cols()));
  }
  if (truth) require_size(*truth, design.cols(), "ProblemInstance truth");
  if (!observation.allFinite()) throw std::invalid_argument("ProblemInstance: non-finite observation");
}

ProblemInstance simulate_observation(const DesignOperator& design, const GroundTruth& truth,
                                     double sigma, std::uint64_t seed, Shape shape) {
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) {
    throw std::invalid_argument("simulate_observation: sigma must be >= 0 (0 = noiseless)");
  }
  require_size(truth.parameter, design.cols(), "simulate_observation truth");
  const Index n = design.rows();
  Vector y = design.apply(truth.parameter);
  if (sigma > 0.0) {
    Rng rng(seed);
    y += (sigma / std::sqrt(static_cast<double>(n))) * rng.normal_vector(n);
  }
  ProblemInstance problem{design, std::move(y), sigma, shape, truth.parameter};
  problem.validate();
  return problem;
}

ProblemInstance simulate_observation(const DesignOperator& design, const GroundTruth& truth,
                                     double sigma, std::uint64_t seed) {
  return simulate_observation(design, truth, sigma, seed, Shape::vector(design.cols()));
}

GroundTruth make_sparse_truth(Index p, Index s, std::uint64_t seed, double magnitude) {
  if (s < 1 || s > p) throw std::invalid_argument("make_sparse_truth: need 1 <= s <= p");
  Rng rng(seed);
  std::vector<Index> order(static_cast<std::size_t>(p));
  std::iota(order.begin(), order.end(), Index{0});
  std::shuffle(order.begin(), order.end(), rng.engine());
  Vector m = Vector::Zero(p);
  for (Index k = 0; k < s; ++k) {
    m(order[static_cast<std::size_t>(k)]) = rng.uniform() < 0.5 ? -magnitude : magnitude;
  }
  return {std::move(m), s};
}

namespace {

Matrix haar_orthonormal(Index rows, Index cols, Rng& rng) {
  Eigen::HouseholderQR<Matrix> qr(rng.normal_matrix(rows, cols));
  Matrix q = qr.householderQ() * Matrix::Identity(rows, cols);
  const Matrix r = qr.matrixQR().topRows(cols).triangularView<Eigen::Upper>();
  for (Index j = 0; j < cols; ++j) {
    if (r(j, j) < 0.0) q.col(j) *= -1.0;
  }
  return q;
}

}  // namespace

GroundTruth make_low_rank_truth(Index p1, Index p2, Index r, std::uint64_t seed) {
  if (r < 1 || r > std::min(p1, p2)) throw std::invalid_argument("make_low_rank_truth: need 1 <= r <= min(p1, p2)");
  Rng rng(seed);
  const Matrix u = haar_orthonormal(p1, r, rng);
  const Matrix v = haar_orthonormal(p2, r, rng);
  Vector d(r);
  for (Index k = 0; k < r; ++k) d(k) = static_cast<double>(r - k);
  const Matrix m = u * d.asDiagonal() * v.transpose();
  return {vec(m), r};
}

GroundTruth make_sign_truth(Index p, std::uint64_t seed) {
  if (p < 1) throw std::invalid_argument("make_sign_truth: p must be >= 1");
  Rng rng(seed);
  Vector m(p);
  for (Index i = 0; i < p; ++i) m(i) = rng.uniform() < 0.5 ? -1.0 : 1.0;
  return {std::move(m), p};
}

GroundTruth make_orthogonal_truth(Index m, std::uint64_t seed) {
  if (m < 1) throw std::invalid_argument("make_orthogonal_truth: m must be >= 1");
  Rng rng(seed);
  return {vec(haar_orthonormal(m, m, rng)), m};
}

}  // namespace atomicinv
