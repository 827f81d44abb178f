#pragma once

#include "atomicinv/atoms.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <limits>

namespace oracle {

/// E ||g||_2 for g ~ N(0, I_p) by the recursion c_1 = sqrt(2/pi), c_{p+1} = p / c_p.
inline double chi_mean(int p) {
  double c = std::sqrt(2.0 / M_PI);
  for (int k = 1; k < p; ++k) c = k / c;
  return c;
}

/// Norms straight from the definitions, independent of AtomSet.
inline double atomic_norm(const atomicinv::AtomSet& atoms, const Eigen::VectorXd& x) {
  const auto& s = atoms.shape();
  switch (atoms.family()) {
    case atomicinv::AtomFamily::kSparse:
      return x.lpNorm<1>();
    case atomicinv::AtomFamily::kSign:
      return x.lpNorm<Eigen::Infinity>();
    case atomicinv::AtomFamily::kLowRank:
      return Eigen::JacobiSVD<Eigen::MatrixXd>(x.reshaped(s.rows, s.cols)).singularValues().sum();
    case atomicinv::AtomFamily::kOrthogonal:
      return Eigen::JacobiSVD<Eigen::MatrixXd>(x.reshaped(s.rows, s.cols)).singularValues()(0);
  }
  return 0.0;
}

inline double dual_norm(const atomicinv::AtomSet& atoms, const Eigen::VectorXd& x) {
  const auto& s = atoms.shape();
  switch (atoms.family()) {
    case atomicinv::AtomFamily::kSparse:
      return x.lpNorm<Eigen::Infinity>();
    case atomicinv::AtomFamily::kSign:
      return x.lpNorm<1>();
    case atomicinv::AtomFamily::kLowRank:
      return Eigen::JacobiSVD<Eigen::MatrixXd>(x.reshaped(s.rows, s.cols)).singularValues()(0);
    case atomicinv::AtomFamily::kOrthogonal:
      return Eigen::JacobiSVD<Eigen::MatrixXd>(x.reshaped(s.rows, s.cols)).singularValues().sum();
  }
  return 0.0;
}

/// Minimizer of a convex scalar function on [lo, hi] by a fine grid followed
/// by golden-section refinement around the best grid point.
inline double scalar_argmin(const std::function<double(double)>& f, double lo, double hi, int grid = 20001) {
  double best_x = lo;
  double best_f = std::numeric_limits<double>::infinity();
  const double h = (hi - lo) / (grid - 1);
  for (int i = 0; i < grid; ++i) {
    const double x = lo + i * h;
    const double v = f(x);
    if (v < best_f) {
      best_f = v;
      best_x = x;
    }
  }
  double a = std::max(lo, best_x - h);
  double b = std::min(hi, best_x + h);
  const double r = (std::sqrt(5.0) - 1.0) / 2.0;
  for (int k = 0; k < 200; ++k) {
    const double c = b - r * (b - a);
    const double d = a + r * (b - a);
    if (f(c) < f(d)) {
      b = d;
    } else {
      a = c;
    }
  }
  return 0.5 * (a + b);
}

/// Euclidean projection of x onto a closed cone in R^2 or R^3 given by a
/// membership predicate: dense angular grid search for the best ray, then
/// the radial optimum on that ray.
inline Eigen::VectorXd brute_cone_projection(const Eigen::VectorXd& x,
                                             const std::function<bool(const Eigen::VectorXd&)>& member,
                                             int resolution = 720) {
  Eigen::VectorXd best = Eigen::VectorXd::Zero(x.size());
  double best_dist = x.squaredNorm();
  auto consider = [&](const Eigen::VectorXd& dir) {
    if (!member(dir)) return;
    const double t = std::max(0.0, x.dot(dir));
    const double dist = (x - t * dir).squaredNorm();
    if (dist < best_dist) {
      best_dist = dist;
      best = t * dir;
    }
  };
  if (x.size() == 2) {
    for (int k = 0; k < 8 * resolution; ++k) {
      const double a = 2.0 * M_PI * k / (8 * resolution);
      consider(Eigen::Vector2d(std::cos(a), std::sin(a)));
    }
  } else {
    for (int i = 0; i <= resolution; ++i) {
      const double th = M_PI * i / resolution;
      for (int j = 0; j < 2 * resolution; ++j) {
        const double ph = M_PI * j / resolution;
        consider(Eigen::Vector3d(std::sin(th) * std::cos(ph), std::sin(th) * std::sin(ph), std::cos(th)));
      }
    }
  }
  return best;
}

}  // namespace oracle
