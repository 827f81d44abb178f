#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace atomicinv {

using Index = Eigen::Index;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Thrown when operand sizes do not agree with an operator or descriptor.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Shape metadata for a parameter: a plain p-vector or a p1 x p2 matrix
/// stored column-major as a vector of length p1 * p2.
struct Shape {
  enum class Kind { kVector, kMatrix };

  Kind kind = Kind::kVector;
  Index rows = 0;
  Index cols = 1;

  static Shape vector(Index p) { return {Kind::kVector, p, 1}; }
  static Shape matrix(Index p1, Index p2) { return {Kind::kMatrix, p1, p2}; }

  Index size() const { return rows * cols; }
  bool is_matrix() const { return kind == Kind::kMatrix; }

  friend bool operator==(const Shape&, const Shape&) = default;
};

std::string to_string(const Shape& shape);

inline void require_size(const Vector& v, Index expected, const char* what) {
  if (v.size() != expected) {
    throw DimensionError(std::string(what) + ": expected length " + std::to_string(expected) +
                         ", got " + std::to_string(v.size()));
  }
}

}  // namespace atomicinv
