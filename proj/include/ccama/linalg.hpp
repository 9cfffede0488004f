#pragma once

#include "ccama/types.hpp"

namespace ccama {

// Solves A X + X A^T + Q = 0 for symmetric Q and Hurwitz A.
// Bartels-Stewart: real Schur form of A, quasi-triangular back-substitution
// over the 1x1/2x2 diagonal blocks, transform back.
Matrix lyapunov_solve(const Matrix& A, const Matrix& Q);

// Count of singular values above the threshold. A negative `tol` selects the
// default rule max(rows, cols) * eps * sigma_max.
int numerical_rank(const Matrix& M, double tol = -1.0);

// Largest singular value.
double spectral_norm(const Matrix& M);

double max_real_eigenvalue(const Matrix& A);

inline bool is_hurwitz(const Matrix& A, double margin = 0.0) {
  return max_real_eigenvalue(A) < -margin;
}

}  // namespace ccama
