#include "atomicinv/linalg.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <numeric>
#include <thread>
#include <vector>

namespace atomicinv {

SortedSvd sorted_svd(const Matrix& m) {
  Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  SortedSvd out{svd.matrixU(), svd.singularValues(), svd.matrixV()};
  // JacobiSVD already sorts descending; fix the sign ambiguity per column.
  for (Index j = 0; j < out.u.cols(); ++j) {
    for (Index i = 0; i < out.u.rows(); ++i) {
      const double entry = out.u(i, j);
      if (std::abs(entry) > 1e-14) {
        if (entry < 0.0) {
          out.u.col(j) *= -1.0;
          out.v.col(j) *= -1.0;
        }
        break;
      }
    }
  }
  return out;
}

Vector soft_threshold(const Vector& x, double t) {
  return x.unaryExpr([t](double a) {
    const double mag = std::abs(a) - t;
    return mag > 0.0 ? std::copysign(mag, a) : 0.0;
  });
}

Vector project_nonneg_l1_ball(const Vector& x, double radius) {
  if (radius <= 0.0) return Vector::Zero(x.size());
  Vector clipped = x.cwiseMax(0.0);
  if (clipped.sum() <= radius) return clipped;
  std::vector<double> sorted(clipped.data(), clipped.data() + clipped.size());
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  double cumulative = 0.0;
  double theta = 0.0;
  for (std::size_t k = 0; k < sorted.size(); ++k) {
    cumulative += sorted[k];
    const double candidate = (cumulative - radius) / static_cast<double>(k + 1);
    if (k + 1 == sorted.size() || sorted[k + 1] <= candidate) {
      theta = candidate;
      break;
    }
  }
  return (clipped.array() - theta).cwiseMax(0.0).matrix();
}

Vector project_l1_ball(const Vector& x, double radius) {
  if (radius <= 0.0) return Vector::Zero(x.size());
  if (x.lpNorm<1>() <= radius) return x;
  const Vector magnitudes = project_nonneg_l1_ball(x.cwiseAbs(), radius);
  Vector out(x.size());
  for (Index i = 0; i < x.size(); ++i) out(i) = std::copysign(magnitudes(i), x(i));
  return out;
}

double max_eigenvalue(const Matrix& sym) {
  if (sym.size() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Matrix> eig(sym, Eigen::EigenvaluesOnly);
  return eig.eigenvalues().maxCoeff();
}

Matrix polar_factor(const Matrix& m) {
  Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  return svd.matrixU() * svd.matrixV().transpose();
}

namespace {

double pairwise_sum(std::span<const double> values) {
  if (values.size() <= 16) {
    double s = 0.0;
    for (double v : values) s += v;
    return s;
  }
  const std::size_t half = values.size() / 2;
  return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

}  // namespace

double pairwise_mean(std::span<const double> values) {
  if (values.empty()) return 0.0;
  return pairwise_sum(values) / static_cast<double>(values.size());
}

double sample_stddev(std::span<const double> values) {
  if (values.size() < 2) return 0.0;
  const double mean = pairwise_mean(values);
  std::vector<double> sq(values.size());
  std::transform(values.begin(), values.end(), sq.begin(),
                 [mean](double v) { return (v - mean) * (v - mean); });
  return std::sqrt(pairwise_sum(sq) / static_cast<double>(values.size() - 1));
}

void parallel_for(Index count, unsigned threads, const std::function<void(Index)>& body) {
  if (count <= 0) return;
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<Index>(threads, count));
  if (threads <= 1) {
    for (Index i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<Index> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::jthread> workers;
  workers.reserve(threads);
  for (unsigned t = 0; t < threads; ++t) {
    workers.emplace_back([&] {
      for (Index i = next.fetch_add(1); i < count; i = next.fetch_add(1)) {
        try {
          body(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  workers.clear();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace atomicinv
