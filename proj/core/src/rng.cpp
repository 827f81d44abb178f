#include "atomicinv/rng.hpp"

#include <cmath>

namespace atomicinv {

std::string to_string(const Shape& shape) {
  if (shape.is_matrix()) {
    return std::to_string(shape.rows) + "x" + std::to_string(shape.cols);
  }
  return std::to_string(shape.rows);
}

std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> path) {
  std::uint64_t state = mix64(master);
  for (std::uint64_t step : path) {
    state = mix64(state ^ mix64(step + 0x632be59bd9b4e019ULL));
  }
  return state;
}

Index Rng::uniform_index(Index bound) {
  std::uniform_int_distribution<Index> dist(0, bound - 1);
  return dist(engine_);
}

Vector Rng::normal_vector(Index n) {
  Vector v(n);
  for (Index i = 0; i < n; ++i) v(i) = normal();
  return v;
}

Matrix Rng::normal_matrix(Index rows, Index cols) {
  Matrix m(rows, cols);
  // Column-major fill so that the stream order matches the storage order.
  for (Index j = 0; j < cols; ++j) {
    for (Index i = 0; i < rows; ++i) m(i, j) = normal();
  }
  return m;
}

Vector Rng::unit_sphere(Index n) {
  Vector v = normal_vector(n);
  double norm = v.norm();
  while (norm == 0.0) {
    v = normal_vector(n);
    norm = v.norm();
  }
  return v / norm;
}

Vector Rng::unit_ball(Index n) {
  const double radius = std::pow(uniform(), 1.0 / static_cast<double>(n));
  return radius * unit_sphere(n);
}

}  // namespace atomicinv
