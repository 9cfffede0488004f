#include "ccama/realization.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <cmath>

#include "ccama/linalg.hpp"

namespace ccama {

namespace {

Eigen::LLT<Matrix> checked_llt(const Matrix& M, const char* what) {
  Eigen::LLT<Matrix> llt(symmetrized(M));
  if (llt.info() != Eigen::Success)
    throw InvalidInput(std::string(what) + " is not positive definite");
  return llt;
}

FilterRealization assemble_realization(const LtiModel& model, const Matrix& X,
                                       const Matrix& B, const Matrix& K,
                                       const Matrix& Omega) {
  FilterRealization out;
  out.B = B;
  out.K = K;
  out.Omega = Omega;
  out.Acl = model.A - B * K;
  out.X = X;
  out.closed_loop_residual =
      (out.Acl * X + X * out.Acl.transpose() + B * Omega * B.transpose())
          .norm();
  const double margin = 1e-10 * spectral_norm(out.Acl);
  if (!is_hurwitz(out.Acl, margin))
    throw NumericalError(
        "realization: closed-loop matrix is not Hurwitz (inconsistent inputs)");
  if (out.closed_loop_residual > 1e-8 * X.norm())
    throw NumericalError(
        "realization: closed-loop covariance identity violated, residual " +
        std::to_string(out.closed_loop_residual));
  return out;
}

}  // namespace

FilterRealization filter_gain(const LtiModel& model, const Matrix& X,
                              const Matrix& B, const Matrix& H,
                              const Matrix& Omega, double consistency_tol) {
  const int n = model.n;
  const int m = static_cast<int>(B.cols());
  if (X.rows() != n || X.cols() != n)
    throw InvalidInput("filter_gain: X dimension mismatch");
  if (B.rows() != n || H.rows() != n || H.cols() != m)
    throw InvalidInput("filter_gain: B/H dimension mismatch");
  if (Omega.rows() != m || Omega.cols() != m)
    throw InvalidInput("filter_gain: Omega dimension mismatch");

  auto llt_x = checked_llt(X, "filter_gain: X");
  checked_llt(Omega, "filter_gain: Omega");

  const Matrix lyap = model.A * X + X * model.A.transpose();
  const double defect =
      (lyap + B * H.transpose() + H * B.transpose()).norm();
  if (defect > consistency_tol * std::max(1.0, lyap.norm()))
    throw InvalidInput("inconsistent (X, B, H): cross-correlation residual " +
                       std::to_string(defect));

  // K = (1/2 Omega B^T - H^T) X^{-1}, via K^T = X^{-1} (1/2 B Omega - H).
  const Matrix Kt = llt_x.solve(0.5 * B * Omega - H);
  return assemble_realization(model, X, B, Kt.transpose(), Omega);
}

FilterRealization optimal_gain(const LtiModel& model, const Matrix& X,
                               const Matrix& B, const Matrix& Omega,
                               double feasibility_tol) {
  const int n = model.n;
  const int m = static_cast<int>(B.cols());
  if (X.rows() != n || X.cols() != n)
    throw InvalidInput("optimal_gain: X dimension mismatch");
  if (B.rows() != n) throw InvalidInput("optimal_gain: B must have n rows");
  if (Omega.rows() != m || Omega.cols() != m)
    throw InvalidInput("optimal_gain: Omega dimension mismatch");

  auto llt_x = checked_llt(X, "optimal_gain: X");
  checked_llt(Omega, "optimal_gain: Omega");

  const auto validation = validate_covariance(model, X, B);
  if (!validation.consistent)
    throw InvalidInput(
        "optimal_gain: X is not realizable through B (rank condition fails), "
        "least-squares residual " +
        std::to_string(validation.residual));

  // Stationarity K = -B^T Lambda reduces the KKT system to
  //   P Lambda X + X Lambda P = -Rc,   P = B B^T,
  // and the congruence with X = L L^T turns it into a commuting form
  //   Pt Lt + Lt Pt = Qt solved on the eigenbasis of Pt.
  const Matrix Rc = model.A * X + X * model.A.transpose() +
                    B * Omega * B.transpose();
  const Matrix L = llt_x.matrixL();
  const Matrix P = B * B.transpose();
  const Matrix Linv = L.triangularView<Eigen::Lower>().solve(
      Matrix::Identity(n, n));
  const Matrix Pt = symmetrized(Linv * P * Linv.transpose());
  const Matrix Qt = symmetrized(Linv * (-Rc) * Linv.transpose());

  Eigen::SelfAdjointEigenSolver<Matrix> es(Pt);
  if (es.info() != Eigen::Success)
    throw NumericalError("optimal_gain: eigensolver failed");
  const Vector d = es.eigenvalues().cwiseMax(0.0);
  const Matrix Qhat = es.eigenvectors().transpose() * Qt * es.eigenvectors();

  const double dscale = d.maxCoeff();
  const double dcut = std::max(dscale, 1.0) * 1e-12;
  Matrix Lhat = Matrix::Zero(n, n);
  double infeasible_sq = 0.0;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const double den = d(i) + d(j);
      if (den > dcut) {
        Lhat(i, j) = Qhat(i, j) / den;
      } else if (std::abs(Qhat(i, j)) >
                 feasibility_tol * std::max(1.0, Qt.norm())) {
        infeasible_sq += Qhat(i, j) * Qhat(i, j);
      }
    }
  }
  if (infeasible_sq > 0.0)
    throw InvalidInput(
        "optimal_gain: constraint right-hand side outside the range of the "
        "constraint map, least-squares residual " +
        std::to_string(std::sqrt(infeasible_sq)));

  const Matrix Lambda = symmetrized(Linv.transpose() *
                                    (es.eigenvectors() * Lhat *
                                     es.eigenvectors().transpose()) *
                                    Linv);
  const Matrix K = -B.transpose() * Lambda;
  return assemble_realization(model, X, B, K, Omega);
}

}  // namespace ccama
