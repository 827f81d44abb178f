#include "atomicinv/cone.hpp"

#include "atomicinv/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace atomicinv {

namespace {

constexpr int kMaxSamplerAttempts = 100000;

Vector normalized(const Vector& h) {
  const double norm = h.norm();
  return norm > 0.0 ? Vector(h / norm) : h;
}

// Random vector with ||d||_1 equal to `l1`.
Vector scaled_l1_direction(Index size, double l1, Rng& rng) {
  Vector d = rng.normal_vector(size);
  const double norm = d.lpNorm<1>();
  if (norm == 0.0) return Vector::Zero(size);
  return d * (l1 / norm);
}

}  // namespace

TangentCone::TangentCone(AtomSet atoms, Vector anchor) : atoms_(std::move(atoms)), anchor_(std::move(anchor)) {
  atoms_.validate_truth({anchor_, 0});
  anchor_norm_ = atoms_.norm(anchor_);
  const Shape& shape = atoms_.shape();
  switch (atoms_.family()) {
    case AtomFamily::kSparse: {
      signs_ = Vector::Zero(anchor_.size());
      for (Index i = 0; i < anchor_.size(); ++i) {
        if (anchor_(i) != 0.0) {
          support_.push_back(i);
          signs_(i) = anchor_(i) > 0.0 ? 1.0 : -1.0;
        } else {
          off_support_.push_back(i);
        }
      }
      structure_size_ = static_cast<Index>(support_.size());
      break;
    }
    case AtomFamily::kSign:
      signs_ = anchor_;
      structure_size_ = anchor_.size();
      break;
    case AtomFamily::kLowRank: {
      const SortedSvd svd = sorted_svd(as_matrix(anchor_, shape.rows, shape.cols));
      const Index rank = (svd.s.array() > 1e-8 * svd.s(0)).count();
      u_ = svd.u.leftCols(rank);
      v_ = svd.v.leftCols(rank);
      structure_size_ = rank;
      break;
    }
    case AtomFamily::kOrthogonal:
      u_ = as_matrix(anchor_, shape.rows, shape.cols);
      structure_size_ = anchor_.size();
      break;
  }
}

bool TangentCone::contains(const Vector& h, double step, double slack) const {
  require_size(h, dimension(), "TangentCone::contains");
  const double norm = h.norm();
  if (norm == 0.0) return true;
  return atoms_.norm(anchor_ + (step / norm) * h) <= anchor_norm_ + slack;
}

Vector TangentCone::candidate(Rng& rng) const {
  const Shape& shape = atoms_.shape();
  switch (atoms_.family()) {
    case AtomFamily::kSparse: {
      Vector h = Vector::Zero(dimension());
      double inner = 0.0;
      for (Index i : support_) {
        h(i) = rng.normal();
        inner += signs_(i) * h(i);
      }
      if (inner > 0.0) {
        for (Index i : support_) h(i) = -h(i);
        inner = -inner;
      }
      if (!off_support_.empty()) {
        const double budget = -inner * rng.uniform();
        const Vector d = scaled_l1_direction(static_cast<Index>(off_support_.size()), budget, rng);
        for (std::size_t k = 0; k < off_support_.size(); ++k) h(off_support_[k]) = d(static_cast<Index>(k));
      }
      return h;
    }
    case AtomFamily::kSign: {
      Vector h(dimension());
      for (Index i = 0; i < h.size(); ++i) h(i) = -signs_(i) * std::abs(rng.normal());
      return h;
    }
    case AtomFamily::kLowRank: {
      const Matrix uvt = u_ * v_.transpose();
      const auto complement = [&](const Matrix& g) {
        const Matrix left = g - u_ * (u_.transpose() * g);
        return Matrix(left - (left * v_) * v_.transpose());
      };
      const Matrix g1 = rng.normal_matrix(shape.rows, shape.cols);
      Matrix h0 = g1 - complement(g1);
      double inner = (uvt.array() * h0.array()).sum();
      if (inner > 0.0) {
        h0 = -h0;
        inner = -inner;
      }
      Matrix hc = complement(rng.normal_matrix(shape.rows, shape.cols));
      const Eigen::JacobiSVD<Matrix> svd(hc);
      const double nuclear = svd.singularValues().sum();
      const double budget = -inner * rng.uniform();
      if (nuclear > 0.0) hc *= budget / nuclear;
      return vec(h0 + hc);
    }
    case AtomFamily::kOrthogonal: {
      const Index m = shape.rows;
      const Matrix a = rng.normal_matrix(m, m);
      const Matrix skew = 0.5 * (a - a.transpose());
      const Matrix b = rng.normal_matrix(m, m);
      const Matrix nsd = -(b * b.transpose()) / static_cast<double>(m);
      const Matrix k = rng.uniform() * skew + rng.uniform() * nsd;
      return vec(u_ * k);
    }
  }
  return Vector::Zero(dimension());
}

Vector TangentCone::sample_direction(Rng& rng) const {
  for (int attempt = 0; attempt < kMaxSamplerAttempts; ++attempt) {
    const Vector h = candidate(rng);
    if (h.norm() > 0.0 && contains(h)) return normalized(h);
  }
  throw std::runtime_error("TangentCone::sample_direction: rejection sampler exhausted");
}

Vector TangentCone::project(const Vector& x) const {
  require_size(x, dimension(), "TangentCone::project");
  const Shape& shape = atoms_.shape();
  switch (atoms_.family()) {
    case AtomFamily::kSparse: {
      double inner = 0.0;
      for (Index i : support_) inner += signs_(i) * x(i);
      std::vector<double> sigma;
      sigma.reserve(off_support_.size());
      for (Index i : off_support_) sigma.push_back(std::abs(x(i)));
      const double t = polar_scale(inner, static_cast<double>(support_.size()), std::move(sigma));
      Vector out(x.size());
      for (Index i : support_) out(i) = x(i) - t * signs_(i);
      for (Index i : off_support_) {
        const double mag = std::abs(x(i)) - t;
        out(i) = mag > 0.0 ? std::copysign(mag, x(i)) : 0.0;
      }
      return out;
    }
    case AtomFamily::kSign:
      return x.binaryExpr(signs_, [](double xi, double si) { return si * std::min(0.0, si * xi); });
    case AtomFamily::kLowRank: {
      const auto g = as_matrix(x, shape.rows, shape.cols);
      const Matrix left = g - u_ * (u_.transpose() * g);
      const Matrix perp = left - (left * v_) * v_.transpose();
      const Matrix tangent = g - perp;
      const Matrix uvt = u_ * v_.transpose();
      const double inner = (uvt.array() * tangent.array()).sum();
      const SortedSvd svd = sorted_svd(perp);
      std::vector<double> sigma(svd.s.data(), svd.s.data() + svd.s.size());
      const double t = polar_scale(inner, static_cast<double>(u_.cols()), std::move(sigma));
      const Vector shrunk = (svd.s.array() - t).cwiseMax(0.0).matrix();
      return vec(tangent - t * uvt + svd.reconstruct(shrunk));
    }
    case AtomFamily::kOrthogonal: {
      const Matrix k = u_.transpose() * as_matrix(x, shape.rows, shape.cols);
      const Matrix sym = 0.5 * (k + k.transpose());
      const Matrix skew = 0.5 * (k - k.transpose());
      Eigen::SelfAdjointEigenSolver<Matrix> eig(sym);
      const Vector negative = eig.eigenvalues().cwiseMin(0.0);
      const Matrix nsd = eig.eigenvectors() * negative.asDiagonal() * eig.eigenvectors().transpose();
      return vec(u_ * (skew + nsd));
    }
  }
  return x;
}

Vector sample_tangent_cone_direction(const TangentCone& cone, std::uint64_t seed) {
  Rng rng(seed);
  return cone.sample_direction(rng);
}

double polar_scale(double inner, double center_sq, std::vector<double> sigma) {
  // f'(t)/2 = t * center_sq - inner - sum_j (sigma_j - t)_+ is increasing in t.
  double total = 0.0;
  for (double s : sigma) total += std::max(s, 0.0);
  if (-inner - total >= 0.0) return 0.0;
  std::sort(sigma.begin(), sigma.end(), std::greater<>());
  double partial = 0.0;
  const std::size_t count = sigma.size();
  for (std::size_t k = 0; k <= count; ++k) {
    if (k > 0) partial += sigma[k - 1];
    const double denom = center_sq + static_cast<double>(k);
    if (denom <= 0.0) continue;
    const double t = (inner + partial) / denom;
    const double upper = k > 0 ? sigma[k - 1] : std::numeric_limits<double>::infinity();
    const double lower = k < count ? std::max(sigma[k], 0.0) : 0.0;
    if (t <= upper && t >= lower) return std::max(t, 0.0);
  }
  // Rounding can step over a breakpoint; fall back to bisection on f'.
  double lo = 0.0;
  double hi = std::max(1.0, (std::abs(inner) + total) / std::max(center_sq, 1e-300));
  for (int iter = 0; iter < 200; ++iter) {
    const double mid = 0.5 * (lo + hi);
    double excess = 0.0;
    for (double s : sigma) excess += std::max(s - mid, 0.0);
    if (mid * center_sq - inner - excess > 0.0) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace atomicinv
