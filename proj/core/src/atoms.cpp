#include "atomicinv/atoms.hpp"

#include "atomicinv/linalg.hpp"

#include <cmath>

namespace atomicinv {

std::string_view to_string(AtomFamily family) {
  switch (family) {
    case AtomFamily::kSparse: return "sparse";
    case AtomFamily::kLowRank: return "low_rank";
    case AtomFamily::kSign: return "sign";
    case AtomFamily::kOrthogonal: return "orthogonal";
  }
  return "unknown";
}

AtomFamily parse_atom_family(std::string_view name) {
  if (name == "sparse" || name == "SPARSE") return AtomFamily::kSparse;
  if (name == "low_rank" || name == "LOW_RANK" || name == "lowrank") return AtomFamily::kLowRank;
  if (name == "sign" || name == "SIGN") return AtomFamily::kSign;
  if (name == "orthogonal" || name == "ORTHOGONAL") return AtomFamily::kOrthogonal;
  throw std::invalid_argument("unknown atom family '" + std::string(name) + "'");
}

AtomSet::AtomSet(AtomFamily family, Shape shape) : family_(family), shape_(shape) {
  if (shape_.rows < 1 || shape_.cols < 1) throw std::invalid_argument("AtomSet: empty shape");
  switch (family_) {
    case AtomFamily::kSparse:
    case AtomFamily::kSign:
      if (shape_.is_matrix()) {
        throw std::invalid_argument(std::string("AtomSet: ") + std::string(to_string(family_)) +
                                    " atoms need a vector shape");
      }
      break;
    case AtomFamily::kLowRank:
      if (!shape_.is_matrix()) throw std::invalid_argument("AtomSet: low_rank atoms need a matrix shape");
      break;
    case AtomFamily::kOrthogonal:
      if (!shape_.is_matrix() || shape_.rows != shape_.cols) {
        throw std::invalid_argument("AtomSet: orthogonal atoms need a square matrix shape");
      }
      break;
  }
}

void AtomSet::check(const Vector& x, const char* what) const {
  require_size(x, dimension(), what);
  if (!x.allFinite()) throw std::invalid_argument(std::string(what) + ": non-finite input");
}

namespace {

Vector singular_values(const Vector& x, const Shape& shape) {
  Eigen::JacobiSVD<Matrix> svd(as_matrix(x, shape.rows, shape.cols));
  return svd.singularValues();
}

// Applies `map` to the singular values of x (as a matrix) and reassembles.
template <typename Map>
Vector spectral_map(const Vector& x, const Shape& shape, Map map) {
  const SortedSvd svd = sorted_svd(as_matrix(x, shape.rows, shape.cols));
  return vec(svd.reconstruct(map(svd.s)));
}

}  // namespace

double AtomSet::norm(const Vector& x) const {
  check(x, "atomic_norm");
  switch (family_) {
    case AtomFamily::kSparse: return x.lpNorm<1>();
    case AtomFamily::kSign: return x.lpNorm<Eigen::Infinity>();
    case AtomFamily::kLowRank: return singular_values(x, shape_).sum();
    case AtomFamily::kOrthogonal: return singular_values(x, shape_).maxCoeff();
  }
  return 0.0;
}

double AtomSet::dual_norm(const Vector& x) const {
  check(x, "dual_atomic_norm");
  switch (family_) {
    case AtomFamily::kSparse: return x.lpNorm<Eigen::Infinity>();
    case AtomFamily::kSign: return x.lpNorm<1>();
    case AtomFamily::kLowRank: return singular_values(x, shape_).maxCoeff();
    case AtomFamily::kOrthogonal: return singular_values(x, shape_).sum();
  }
  return 0.0;
}

Vector AtomSet::prox(const Vector& x, double t) const {
  check(x, "prox_atomic_norm");
  if (!(t > 0.0)) throw std::invalid_argument("prox_atomic_norm: t must be > 0");
  switch (family_) {
    case AtomFamily::kSparse: return soft_threshold(x, t);
    // Moreau: prox of t||.|| = x - projection onto the t-radius dual ball.
    case AtomFamily::kSign: return x - project_l1_ball(x, t);
    case AtomFamily::kLowRank:
      return spectral_map(x, shape_, [t](const Vector& s) { return (s.array() - t).cwiseMax(0.0).matrix().eval(); });
    case AtomFamily::kOrthogonal:
      return spectral_map(x, shape_, [t](const Vector& s) { return (s - project_nonneg_l1_ball(s, t)).eval(); });
  }
  return x;
}

Vector AtomSet::project_dual_ball(const Vector& x, double radius) const {
  check(x, "project_dual_ball");
  if (radius < 0.0) throw std::invalid_argument("project_dual_ball: radius must be >= 0");
  switch (family_) {
    case AtomFamily::kSparse: return x.cwiseMax(-radius).cwiseMin(radius);
    case AtomFamily::kSign: return project_l1_ball(x, radius);
    case AtomFamily::kLowRank:
      return spectral_map(x, shape_, [radius](const Vector& s) { return s.cwiseMin(radius).eval(); });
    case AtomFamily::kOrthogonal:
      return spectral_map(x, shape_, [radius](const Vector& s) { return project_nonneg_l1_ball(s, radius); });
  }
  return x;
}

Vector AtomSet::project_norm_ball(const Vector& x, double radius) const {
  check(x, "project_norm_ball");
  if (radius < 0.0) throw std::invalid_argument("project_norm_ball: radius must be >= 0");
  switch (family_) {
    case AtomFamily::kSparse: return project_l1_ball(x, radius);
    case AtomFamily::kSign: return x.cwiseMax(-radius).cwiseMin(radius);
    case AtomFamily::kLowRank:
      return spectral_map(x, shape_, [radius](const Vector& s) { return project_nonneg_l1_ball(s, radius); });
    case AtomFamily::kOrthogonal:
      return spectral_map(x, shape_, [radius](const Vector& s) { return s.cwiseMin(radius).eval(); });
  }
  return x;
}

Vector AtomSet::dual_maximizer(const Vector& x) const {
  check(x, "dual_maximizer");
  switch (family_) {
    case AtomFamily::kSparse: {
      Index arg = 0;
      x.cwiseAbs().maxCoeff(&arg);
      Vector a = Vector::Zero(x.size());
      a(arg) = x(arg) < 0.0 ? -1.0 : 1.0;
      return a;
    }
    case AtomFamily::kSign:
      return x.unaryExpr([](double v) { return v < 0.0 ? -1.0 : 1.0; });
    case AtomFamily::kLowRank: {
      const SortedSvd svd = sorted_svd(as_matrix(x, shape_.rows, shape_.cols));
      return vec(svd.u.col(0) * svd.v.col(0).transpose());
    }
    case AtomFamily::kOrthogonal:
      return vec(polar_factor(as_matrix(x, shape_.rows, shape_.cols)));
  }
  return x;
}

void AtomSet::validate_truth(const GroundTruth& truth) const {
  check(truth.parameter, "validate_truth");
  const Vector& m = truth.parameter;
  switch (family_) {
    case AtomFamily::kSparse: {
      const Index nnz = (m.array() != 0.0).count();
      if (nnz == 0) throw std::invalid_argument("sparse truth must have at least one nonzero");
      if (truth.complexity != 0 && nnz != truth.complexity) {
        throw std::invalid_argument("sparse truth: " + std::to_string(nnz) + " nonzeros, expected " +
                                    std::to_string(truth.complexity));
      }
      break;
    }
    case AtomFamily::kLowRank: {
      const Vector s = singular_values(m, shape_);
      if (s(0) == 0.0) throw std::invalid_argument("low-rank truth must be nonzero");
      const Index rank = (s.array() > 1e-8 * s(0)).count();
      if (truth.complexity != 0 && rank != truth.complexity) {
        throw std::invalid_argument("low-rank truth: numerical rank " + std::to_string(rank) +
                                    ", expected " + std::to_string(truth.complexity));
      }
      break;
    }
    case AtomFamily::kSign:
      if (!((m.array() == 1.0) || (m.array() == -1.0)).all()) {
        throw std::invalid_argument("sign truth must have every entry in {+1, -1}");
      }
      break;
    case AtomFamily::kOrthogonal: {
      const auto q = as_matrix(m, shape_.rows, shape_.cols);
      const double defect = (q.transpose() * q - Matrix::Identity(shape_.cols, shape_.cols)).lpNorm<Eigen::Infinity>();
      if (defect > 1e-10) throw std::invalid_argument("orthogonal truth: M^T M deviates from I");
      break;
    }
  }
}

double atomic_norm(const AtomSet& atoms, const Vector& x) { return atoms.norm(x); }
double dual_atomic_norm(const AtomSet& atoms, const Vector& x) { return atoms.dual_norm(x); }
Vector prox_atomic_norm(const AtomSet& atoms, const Vector& x, double t) { return atoms.prox(x, t); }

double asphericity_upper_bound(AtomFamily family, Index complexity) {
  switch (family) {
    case AtomFamily::kSparse: return 2.0 * std::sqrt(static_cast<double>(complexity));
    case AtomFamily::kLowRank: return 2.0 * std::sqrt(2.0 * static_cast<double>(complexity));
    case AtomFamily::kSign:
    case AtomFamily::kOrthogonal: return 1.0;
  }
  throw std::invalid_argument("asphericity_upper_bound: unknown family");
}

double asphericity_upper_bound(const AtomSet& atoms, const GroundTruth& truth) {
  if (truth.complexity < 1 &&
      (atoms.family() == AtomFamily::kSparse || atoms.family() == AtomFamily::kLowRank)) {
    throw std::invalid_argument("asphericity_upper_bound: truth complexity unknown");
  }
  return asphericity_upper_bound(atoms.family(), truth.complexity);
}

}  // namespace atomicinv
