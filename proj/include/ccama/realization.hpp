#pragma once

#include "ccama/problem.hpp"
#include "ccama/types.hpp"

namespace ccama {

// Linear filter realizing a state covariance: driving x' = (A - B K) x + B w
// with white noise of covariance Omega reproduces X, i.e.
// Acl X + X Acl^T + B Omega B^T = 0 with Acl = A - B K Hurwitz.
struct FilterRealization {
  Matrix B;
  Matrix K;
  Matrix Omega;
  Matrix Acl;
  Matrix X;  // the assigned covariance
  double closed_loop_residual = 0.0;
};

// K = (1/2) Omega B^T X^{-1} - H^T X^{-1} for an H satisfying the
// cross-correlation constraint A X + X A^T + B H^T + H B^T = 0.
FilterRealization filter_gain(const LtiModel& model, const Matrix& X,
                              const Matrix& B, const Matrix& H,
                              const Matrix& Omega,
                              double consistency_tol = 1e-6);

// Least-energy gain: minimizes trace(K X K^T) subject to
// B K X + X K^T B^T = A X + X A^T + B Omega B^T. Solved through the KKT
// system: eliminating K = -B^T Lambda leaves a generalized Lyapunov equation
// for the multiplier, handled spectrally after a congruence with the
// Cholesky factor of X.
FilterRealization optimal_gain(const LtiModel& model, const Matrix& X,
                               const Matrix& B, const Matrix& Omega,
                               double feasibility_tol = 1e-6);

}  // namespace ccama
