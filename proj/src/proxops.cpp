#include "ccama/proxops.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <numeric>

namespace ccama {

SpectralDecomposition SpectralDecomposition::compute(const Matrix& M) {
  if (M.rows() != M.cols())
    throw InvalidInput("SpectralDecomposition: matrix must be square");
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrized(M));
  if (es.info() != Eigen::Success)
    throw NumericalError("SpectralDecomposition: eigensolver failed");

  const Vector& lam = es.eigenvalues();
  const int n = static_cast<int>(lam.size());
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    const double aa = std::abs(lam(a)), ab = std::abs(lam(b));
    if (aa != ab) return aa > ab;
    return lam(a) > lam(b);
  });

  SpectralDecomposition out;
  out.U.resize(n, n);
  out.lambda.resize(n);
  for (int k = 0; k < n; ++k) {
    out.U.col(k) = es.eigenvectors().col(order[k]);
    out.lambda(k) = lam(order[k]);
  }
  return out;
}

Matrix SpectralDecomposition::assemble(const Vector& mapped) const {
  return U * mapped.asDiagonal() * U.transpose();
}

Vector soft_threshold_spectrum(const Vector& lambda, double tau) {
  Vector out(lambda.size());
  for (int i = 0; i < lambda.size(); ++i) {
    const double mag = std::max(std::abs(lambda(i)) - tau, 0.0);
    out(i) = lambda(i) >= 0.0 ? mag : -mag;
  }
  return out;
}

Vector saturate_spectrum(const Vector& lambda, double tau) {
  Vector out(lambda.size());
  for (int i = 0; i < lambda.size(); ++i)
    out(i) = std::clamp(lambda(i), -tau, tau);
  return out;
}

Matrix soft_threshold(const Matrix& M, double tau) {
  if (tau < 0.0) throw InvalidInput("soft_threshold: tau must be nonnegative");
  const auto eig = SpectralDecomposition::compute(M);
  return eig.assemble(soft_threshold_spectrum(eig.lambda, tau));
}

Matrix saturate(const Matrix& M, double tau) {
  if (tau < 0.0) throw InvalidInput("saturate: tau must be nonnegative");
  const auto eig = SpectralDecomposition::compute(M);
  return eig.assemble(saturate_spectrum(eig.lambda, tau));
}

Matrix logdet_resolvent(const Matrix& R, double mu) {
  if (mu <= 0.0) throw InvalidInput("logdet_resolvent: mu must be positive");
  const auto eig = SpectralDecomposition::compute(R);
  Vector g(eig.lambda.size());
  for (int i = 0; i < g.size(); ++i) {
    const double h = eig.lambda(i) / (2.0 * mu);
    g(i) = h + std::sqrt(h * h + 1.0 / mu);
  }
  return eig.assemble(g);
}

double nuclear_norm_sym(const Matrix& M) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrized(M),
                                           Eigen::EigenvaluesOnly);
  return es.eigenvalues().cwiseAbs().sum();
}

}  // namespace ccama
