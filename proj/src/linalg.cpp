#include "ccama/linalg.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <sstream>
#include <vector>

namespace ccama {

namespace {

// Diagonal block layout of a real quasi-triangular Schur factor.
struct BlockLayout {
  std::vector<int> start;
  std::vector<int> size;
};

BlockLayout schur_blocks(const Matrix& T) {
  BlockLayout b;
  const int n = static_cast<int>(T.rows());
  for (int i = 0; i < n;) {
    const int s = (i + 1 < n && T(i + 1, i) != 0.0) ? 2 : 1;
    b.start.push_back(i);
    b.size.push_back(s);
    i += s;
  }
  return b;
}

// Real parts of the eigenvalues read off the quasi-triangular diagonal.
double max_real_from_schur(const Matrix& T, const BlockLayout& b) {
  double worst = -std::numeric_limits<double>::infinity();
  for (size_t k = 0; k < b.start.size(); ++k) {
    const int i = b.start[k];
    const double re =
        (b.size[k] == 2) ? 0.5 * (T(i, i) + T(i + 1, i + 1)) : T(i, i);
    worst = std::max(worst, re);
  }
  return worst;
}

// Solves Tii * Y + Y * Tjj^T = R for blocks of size <= 2 via the
// vectorized system (I (x) Tii + Tjj (x) I) vec(Y) = vec(R).
Matrix small_sylvester(const Eigen::Ref<const Matrix>& Tii,
                       const Eigen::Ref<const Matrix>& Tjj,
                       const Matrix& R, double scale) {
  const int si = static_cast<int>(Tii.rows());
  const int sj = static_cast<int>(Tjj.rows());
  Matrix K = Matrix::Zero(si * sj, si * sj);
  for (int c = 0; c < sj; ++c) K.block(c * si, c * si, si, si) += Tii;
  for (int r = 0; r < si; ++r)
    for (int c = 0; c < sj; ++c)
      for (int c2 = 0; c2 < sj; ++c2) K(c * si + r, c2 * si + r) += Tjj(c, c2);

  Eigen::JacobiSVD<Matrix> svd(K, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const double smax = svd.singularValues()(0);
  const double smin = svd.singularValues()(si * sj - 1);
  if (smin <= 64.0 * std::numeric_limits<double>::epsilon() *
                  std::max(smax, scale)) {
    std::ostringstream msg;
    msg << "lyapunov_solve: ill-conditioned back-substitution, block condition"
        << " estimate " << (smin > 0.0 ? smax / smin
                                       : std::numeric_limits<double>::infinity());
    throw NumericalError(msg.str());
  }
  Eigen::Map<const Vector> rvec(R.data(), si * sj);
  Vector y = svd.solve(rvec);
  return Eigen::Map<const Matrix>(y.data(), si, sj);
}

}  // namespace

Matrix lyapunov_solve(const Matrix& A, const Matrix& Q) {
  const int n = static_cast<int>(A.rows());
  if (A.cols() != n) throw InvalidInput("lyapunov_solve: A must be square");
  if (Q.rows() != n || Q.cols() != n)
    throw InvalidInput("lyapunov_solve: Q dimension mismatch");

  Eigen::RealSchur<Matrix> schur(A);
  if (schur.info() != Eigen::Success)
    throw NumericalError("lyapunov_solve: Schur decomposition failed");
  const Matrix& T = schur.matrixT();
  const Matrix& U = schur.matrixU();
  const BlockLayout blocks = schur_blocks(T);

  if (max_real_from_schur(T, blocks) >= 0.0)
    throw NumericalError("unstable generator");

  // T Y + Y T^T = C, blocks swept from the bottom-right corner.
  const Matrix C = -(U.transpose() * symmetrized(Q) * U);
  Matrix Y = Matrix::Zero(n, n);
  const int nb = static_cast<int>(blocks.start.size());
  const double scale = T.cwiseAbs().maxCoeff();
  for (int bi = nb - 1; bi >= 0; --bi) {
    const int i0 = blocks.start[bi], si = blocks.size[bi];
    const int itail = i0 + si;
    for (int bj = nb - 1; bj >= 0; --bj) {
      const int j0 = blocks.start[bj], sj = blocks.size[bj];
      const int jtail = j0 + sj;
      Matrix rhs = C.block(i0, j0, si, sj);
      if (itail < n)
        rhs -= T.block(i0, itail, si, n - itail) *
               Y.block(itail, j0, n - itail, sj);
      if (jtail < n)
        rhs -= Y.block(i0, jtail, si, n - jtail) *
               T.block(j0, jtail, sj, n - jtail).transpose();
      Y.block(i0, j0, si, sj) = small_sylvester(
          T.block(i0, i0, si, si), T.block(j0, j0, sj, sj), rhs, scale);
    }
  }
  return symmetrized(U * Y * U.transpose());
}

int numerical_rank(const Matrix& M, double tol) {
  if (M.size() == 0) return 0;
  Eigen::BDCSVD<Matrix> svd(M);
  const Vector& s = svd.singularValues();
  if (s.size() == 0 || s(0) == 0.0) return 0;
  const double cut =
      tol >= 0.0
          ? tol
          : static_cast<double>(std::max(M.rows(), M.cols())) *
                std::numeric_limits<double>::epsilon() * s(0);
  int r = 0;
  for (int i = 0; i < s.size(); ++i)
    if (s(i) > cut) ++r;
  return r;
}

double spectral_norm(const Matrix& M) {
  if (M.size() == 0) return 0.0;
  Eigen::BDCSVD<Matrix> svd(M);
  return svd.singularValues().size() > 0 ? svd.singularValues()(0) : 0.0;
}

double max_real_eigenvalue(const Matrix& A) {
  Eigen::EigenSolver<Matrix> es(A, /*computeEigenvectors=*/false);
  return es.eigenvalues().real().maxCoeff();
}

}  // namespace ccama
