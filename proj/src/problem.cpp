#include "ccama/problem.hpp"

#include <Eigen/Cholesky>
#include <Eigen/SVD>

namespace ccama {

LtiModel::LtiModel(Matrix A_, Matrix C_) : A(std::move(A_)), C(std::move(C_)) {
  if (A.rows() != A.cols()) throw InvalidInput("LtiModel: A must be square");
  n = static_cast<int>(A.rows());
  p = static_cast<int>(C.rows());
  if (C.cols() != n) throw InvalidInput("LtiModel: C must have n columns");
  if (!all_finite(A) || !all_finite(C))
    throw InvalidInput("LtiModel: non-finite entries");
  if (!is_hurwitz(A)) throw InvalidInput("LtiModel: A is not Hurwitz");
}

CovarianceData::CovarianceData(Matrix G_, Matrix E_)
    : G(std::move(G_)), E(std::move(E_)) {
  if (G.rows() != G.cols() || E.rows() != E.cols() || G.rows() != E.rows())
    throw InvalidInput("CovarianceData: G and E must be square of equal size");
  if (!all_finite(G)) throw InvalidInput("CovarianceData: non-finite entries");
  if (max_asymmetry(E) != 0.0)
    throw InvalidInput("CovarianceData: E must be symmetric");
  for (int j = 0; j < E.cols(); ++j)
    for (int i = 0; i < E.rows(); ++i)
      if (E(i, j) != 0.0 && E(i, j) != 1.0)
        throw InvalidInput("CovarianceData: E entries must be 0 or 1");
  if (max_asymmetry(G) > 1e-12)
    throw InvalidInput("CovarianceData: G asymmetry exceeds 1e-12");
  G = symmetrized(G);
  if (((G.array() * (1.0 - E.array())).abs() > 0.0).any())
    throw InvalidInput("CovarianceData: unobserved entries of G must be zero");
}

ProblemInstance::ProblemInstance(LtiModel model_, CovarianceData data_,
                                 double gamma_)
    : model(std::move(model_)), data(std::move(data_)), gamma(gamma_) {
  if (gamma <= 0.0) throw InvalidInput("ProblemInstance: gamma must be positive");
  if (data.G.rows() != model.p)
    throw InvalidInput("ProblemInstance: data dimension must equal p");
}

MsdGroundTruth gen_msd(int masses, double gamma,
                       const std::optional<Matrix>& mask) {
  if (masses < 1) throw InvalidInput("gen_msd: need at least one mass");
  const int N = masses;
  const int n = 2 * N;

  Matrix T = Matrix::Zero(N, N);
  for (int i = 0; i < N; ++i) {
    T(i, i) = 2.0;
    if (i + 1 < N) {
      T(i, i + 1) = -1.0;
      T(i + 1, i) = -1.0;
    }
  }

  Matrix A = Matrix::Zero(n, n);
  A.block(0, N, N, N) = Matrix::Identity(N, N);
  A.block(N, 0, N, N) = -T;
  A.block(N, N, N, N) = -Matrix::Identity(N, N);

  // Low-pass filter zeta' = -zeta + d augments the plant; the white input d
  // enters only through the filter block.
  Matrix A_aug = Matrix::Zero(3 * N, 3 * N);
  A_aug.block(0, 0, n, n) = A;
  A_aug.block(N, n, N, N) = Matrix::Identity(N, N);  // B_zeta = [0; I]
  A_aug.block(n, n, N, N) = -Matrix::Identity(N, N);
  Matrix Q_aug = Matrix::Zero(3 * N, 3 * N);
  Q_aug.block(n, n, N, N) = Matrix::Identity(N, N);  // B~ B~^T

  Matrix Sigma = lyapunov_solve(A_aug, Q_aug);
  Matrix Sigma_xx = symmetrized(Sigma.topLeftCorner(n, n));

  Matrix E;
  if (mask) {
    E = *mask;
    if (E.rows() != n || E.cols() != n)
      throw InvalidInput("gen_msd: mask must be 2N x 2N");
  } else {
    E = Matrix::Zero(n, n);
    for (int i = 0; i < N; ++i) {
      E(i, i) = 1.0;          // diag(Sigma_pp)
      E(N + i, N + i) = 1.0;  // diag(Sigma_vv)
      E(i, N + i) = 1.0;      // diag(Sigma_pv)
      E(N + i, i) = 1.0;
    }
  }
  Matrix G = Sigma_xx.cwiseProduct(E);

  LtiModel model(A, Matrix::Identity(n, n));
  ProblemInstance instance(std::move(model), CovarianceData(G, E), gamma);
  return MsdGroundTruth{std::move(instance), std::move(Sigma_xx),
                        std::move(Sigma), N};
}

CovarianceValidation validate_covariance(const LtiModel& model, const Matrix& X,
                                         const Matrix& B, double rank_tol) {
  const int n = model.n;
  if (X.rows() != n || X.cols() != n)
    throw InvalidInput("validate_covariance: X dimension mismatch");
  if (B.rows() != n) throw InvalidInput("validate_covariance: B must have n rows");
  const int m = static_cast<int>(B.cols());

  Eigen::LLT<Matrix> llt(symmetrized(X));
  if (llt.info() != Eigen::Success)
    throw InvalidInput("validate_covariance: X is not positive definite");

  const Matrix Z = -symmetrized(model.A * X + X * model.A.transpose());

  Matrix bordered = Matrix::Zero(n + m, n + m);
  bordered.topLeftCorner(n, n) = -Z;
  bordered.topRightCorner(n, m) = B;
  bordered.bottomLeftCorner(m, n) = B.transpose();
  Matrix reference = bordered;
  reference.topLeftCorner(n, n).setZero();

  CovarianceValidation out;
  out.rank_bordered = numerical_rank(bordered, rank_tol);
  out.rank_reference = numerical_rank(reference, rank_tol);
  out.consistent = out.rank_bordered == out.rank_reference;

  // Least-squares H for B H^T + H B^T = Z, built in an orthonormal basis of
  // range(B): with B = Q1 * M (M full row rank), the blocks of Q^T Z Q give
  // H1 = (1/2) Z11 * pinv(M)^T, H2 = Z21 * pinv(M)^T, and the unattainable
  // defect is the Z22 block.
  Eigen::BDCSVD<Matrix> svd(B, Eigen::ComputeFullU | Eigen::ComputeThinV);
  const int r = numerical_rank(B, rank_tol);
  if (r == 0) {
    out.H = Matrix::Zero(n, m);
    out.residual = Z.norm();
    return out;
  }
  const Matrix Q1 = svd.matrixU().leftCols(r);
  const Matrix Q2 = svd.matrixU().rightCols(n - r);
  const Matrix M = Q1.transpose() * B;  // r x m, full row rank
  const Matrix pinvMt =
      (M * M.transpose()).ldlt().solve(M).transpose();  // m x r, pinv(M)^T
  const Matrix Z11 = Q1.transpose() * Z * Q1;
  const Matrix Z21 = Q2.transpose() * Z * Q1;
  Matrix Ht = Matrix::Zero(n, m);
  Ht.topRows(r) = 0.5 * Z11 * pinvMt.transpose();
  Ht.bottomRows(n - r) = Z21 * pinvMt.transpose();
  out.H = svd.matrixU() * Ht;
  out.residual = (B * out.H.transpose() + out.H * B.transpose() - Z).norm();
  return out;
}

}  // namespace ccama
