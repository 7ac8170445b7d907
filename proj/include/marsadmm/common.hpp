#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace marsadmm {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Thrown when an argument does not have the shape an operation expects.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Thrown when a runtime certificate that must hold by construction fails.
/// Seeing one of these means a bug, not bad input.
class InvariantViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Frobenius inner product.
inline double inner(const Matrix& a, const Matrix& b) {
  return a.cwiseProduct(b).sum();
}

inline std::string shape_string(Index rows, Index cols) {
  return std::to_string(rows) + "x" + std::to_string(cols);
}

inline void require_same_shape(const Matrix& a, const Matrix& b,
                               const char* what) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw DimensionError(std::string(what) + ": shape " +
                         shape_string(a.rows(), a.cols()) + " vs " +
                         shape_string(b.rows(), b.cols()));
  }
}

}  // namespace marsadmm
