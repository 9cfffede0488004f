#pragma once

#include <optional>

#include "ccama/linalg.hpp"
#include "ccama/types.hpp"

namespace ccama {

// x' = A x + B u, y = C x with Hurwitz A.
struct LtiModel {
  Matrix A;
  Matrix C;
  int n = 0;
  int p = 0;

  LtiModel(Matrix A_, Matrix C_);
};

// Observed output correlations G with structural identity E: E_ij = 1 where
// G_ij is available, unobserved entries of G are stored as zero.
struct CovarianceData {
  Matrix G;
  Matrix E;

  CovarianceData(Matrix G_, Matrix E_);
};

struct ProblemInstance {
  LtiModel model;
  CovarianceData data;
  double gamma;

  ProblemInstance(LtiModel model_, CovarianceData data_, double gamma_);
};

struct MsdGroundTruth {
  ProblemInstance instance;
  Matrix Sigma_xx;    // true 2N x 2N state covariance
  Matrix Sigma_full;  // filter-augmented 3N x 3N covariance
  int masses = 0;
};

// Mass-spring-damper chain of N unit masses forced through a first-order
// low-pass filter. State x = [positions; velocities], A = [[0, I], [-T, -I]]
// with T the tridiagonal (-1, 2, -1) Toeplitz stiffness matrix. The default
// mask observes the one-point correlations: diagonals of Sigma_pp, Sigma_vv
// and Sigma_pv. A custom symmetric 0/1 mask may be supplied instead.
MsdGroundTruth gen_msd(int masses, double gamma = 1.0,
                       const std::optional<Matrix>& mask = std::nullopt);

struct CovarianceValidation {
  int rank_bordered = 0;   // rank [A X + X A^T, B; B^T, 0]
  int rank_reference = 0;  // rank [0, B; B^T, 0]
  bool consistent = false;
  Matrix H;         // least-squares solution of A X + X A^T = -(B H^T + H B^T)
  double residual = 0.0;  // Frobenius norm of the defect at that H
};

// Checks whether X > 0 qualifies as a state covariance of (A, B): the rank
// condition on the bordered matrix, plus the least-squares cross-correlation
// factor H and its residual.
CovarianceValidation validate_covariance(const LtiModel& model, const Matrix& X,
                                         const Matrix& B, double rank_tol = -1.0);

}  // namespace ccama
