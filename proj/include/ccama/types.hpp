#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

namespace ccama {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Bad problem data, file contents, or arguments.
class InvalidInput : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Numerical failure: lost positive definiteness, non-convergent inner scheme,
// ill-conditioned solve, and the like.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline Matrix symmetrized(const Matrix& m) {
  return 0.5 * (m + m.transpose());
}

inline double max_asymmetry(const Matrix& m) {
  return (m - m.transpose()).cwiseAbs().maxCoeff();
}

inline bool all_finite(const Matrix& m) {
  return m.allFinite();
}

}  // namespace ccama
