#include "ccama/decomposition.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>

#include "ccama/linalg.hpp"
#include "ccama/proxops.hpp"

namespace ccama {

namespace {

// Eigendecomposition with eigenvalues sorted descending (signed).
std::pair<Matrix, Vector> eig_descending(const Matrix& Z) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrized(Z));
  if (es.info() != Eigen::Success)
    throw NumericalError("signature: eigensolver failed");
  const int n = static_cast<int>(Z.rows());
  Matrix U(n, n);
  Vector lam(n);
  for (int i = 0; i < n; ++i) {
    U.col(i) = es.eigenvectors().col(n - 1 - i);
    lam(i) = es.eigenvalues()(n - 1 - i);
  }
  return {std::move(U), std::move(lam)};
}

Signature signature_from(const Vector& lam_desc, double zero_tol) {
  Signature s;
  s.eigenvalues = lam_desc;
  s.zero_tol = zero_tol;
  const double scale = lam_desc.size() ? lam_desc.cwiseAbs().maxCoeff() : 0.0;
  const double cut = zero_tol * scale;
  for (int i = 0; i < lam_desc.size(); ++i) {
    const double v = lam_desc(i);
    if (v > cut)
      ++s.pi;
    else if (v < -cut)
      ++s.nu;
    else
      ++s.delta;
    const double mag = std::abs(v);
    if (cut > 0.0 && mag > cut / 10.0 && mag < cut * 10.0)
      s.near_cut.push_back(v);
  }
  return s;
}

}  // namespace

Signature signature(const Matrix& Z, double zero_tol) {
  if (Z.rows() != Z.cols()) throw InvalidInput("signature: Z must be square");
  return signature_from(eig_descending(Z).second, zero_tol);
}

std::pair<Matrix, Signature> congruence_to_canonical(const Matrix& Z,
                                                     double zero_tol) {
  if (Z.rows() != Z.cols())
    throw InvalidInput("congruence_to_canonical: Z must be square");
  const int n = static_cast<int>(Z.rows());
  auto [U, lam] = eig_descending(Z);
  Signature sig = signature_from(lam, zero_tol);
  const double scale = lam.size() ? lam.cwiseAbs().maxCoeff() : 0.0;
  const double cut = zero_tol * scale;

  // Descending order already groups positives first; zeros and negatives
  // need the (+, -, 0) block arrangement.
  std::vector<int> order;
  order.reserve(n);
  for (int i = 0; i < n; ++i)
    if (lam(i) > cut) order.push_back(i);
  for (int i = n - 1; i >= 0; --i)
    if (lam(i) < -cut) order.push_back(i);  // most negative first
  for (int i = 0; i < n; ++i)
    if (std::abs(lam(i)) <= cut) order.push_back(i);

  Matrix T(n, n);
  for (int k = 0; k < n; ++k) {
    const int i = order[k];
    const double s =
        std::abs(lam(i)) > cut ? std::sqrt(2.0 / std::abs(lam(i))) : 1.0;
    T.row(k) = s * U.col(i).transpose();
  }
  return {std::move(T), std::move(sig)};
}

ChannelDecomposition factor_channels(const Matrix& Z, double zero_tol) {
  if (Z.rows() != Z.cols())
    throw InvalidInput("factor_channels: Z must be square");
  const int n = static_cast<int>(Z.rows());
  auto [T, sig] = congruence_to_canonical(Z, zero_tol);
  const int pi = sig.pi, nu = sig.nu;
  const int m = std::max(pi, nu);
  if (m == 0) throw InvalidInput("factor_channels: nothing to factor");

  // Canonical-coordinate factors; rows follow the (+, -, 0) block order of
  // T Z T^T = 2 diag(I_pi, -I_nu, 0).
  Matrix Bh = Matrix::Zero(n, m);
  Matrix Hh = Matrix::Zero(n, m);
  if (pi <= nu) {
    // rows: pi | pi | nu-pi | rest, columns: pi | nu-pi
    Bh.block(0, 0, pi, pi).setIdentity();
    Bh.block(pi, 0, pi, pi).setIdentity();
    Bh.block(2 * pi, pi, nu - pi, nu - pi).setIdentity();
    Hh.block(0, 0, pi, pi).setIdentity();
    Hh.block(pi, 0, pi, pi) = -Matrix::Identity(pi, pi);
    Hh.block(2 * pi, pi, nu - pi, nu - pi) =
        -Matrix::Identity(nu - pi, nu - pi);
  } else {
    // rows: pi-nu | nu | nu | rest, columns: pi-nu | nu
    Bh.block(0, 0, pi - nu, pi - nu).setIdentity();
    Bh.block(pi - nu, pi - nu, nu, nu).setIdentity();
    Bh.block(pi, pi - nu, nu, nu).setIdentity();
    Hh.block(0, 0, pi - nu, pi - nu).setIdentity();
    Hh.block(pi - nu, pi - nu, nu, nu).setIdentity();
    Hh.block(pi, pi - nu, nu, nu) = -Matrix::Identity(nu, nu);
  }

  ChannelDecomposition out;
  Eigen::PartialPivLU<Matrix> lu(T);
  out.B = lu.solve(Bh);
  out.H = lu.solve(Hh);
  out.m = m;
  Matrix canonical = Matrix::Zero(n, n);
  canonical.topLeftCorner(pi, pi) = 2.0 * Matrix::Identity(pi, pi);
  canonical.block(pi, pi, nu, nu) = -2.0 * Matrix::Identity(nu, nu);
  out.canonical_residual = (T * Z * T.transpose() - canonical).norm();
  out.reconstruction_residual =
      (out.B * out.H.transpose() + out.H * out.B.transpose() - Z).norm();
  out.sig = std::move(sig);
  out.T = std::move(T);
  return out;
}

int geometric_multiplicity_bound(const Matrix& A, double rank_tol) {
  const int n = static_cast<int>(A.rows());
  if (A.cols() != n)
    throw InvalidInput("geometric_multiplicity_bound: A must be square");
  if (n == 0) return 0;
  Eigen::EigenSolver<Matrix> es(A, /*computeEigenvectors=*/false);
  const Eigen::VectorXcd lam = es.eigenvalues();
  const double scale = std::max(1.0, A.cwiseAbs().maxCoeff());

  int mu = 0;
  std::vector<std::complex<double>> done;
  for (int k = 0; k < n; ++k) {
    std::complex<double> l = lam(k);
    if (l.imag() < 0.0) l = std::conj(l);  // conjugate pairs counted once
    bool seen = false;
    for (const auto& d : done)
      if (std::abs(d - l) <= 1e-10 * scale) {
        seen = true;
        break;
      }
    if (seen) continue;
    done.push_back(l);
    Eigen::MatrixXcd shifted = A.cast<std::complex<double>>();
    shifted.diagonal().array() -= l;
    Eigen::BDCSVD<Eigen::MatrixXcd> svd(shifted);
    const auto& s = svd.singularValues();
    const double cut = rank_tol >= 0.0
                           ? rank_tol
                           : n * std::numeric_limits<double>::epsilon() * s(0);
    int rank = 0;
    for (int i = 0; i < s.size(); ++i)
      if (s(i) > cut) ++rank;
    mu = std::max(mu, n - rank);
  }
  return mu;
}

SignatureBoundsReport check_signature_bounds(const Matrix& A, const Matrix& X,
                                             const Matrix& Z, int m,
                                             double zero_tol,
                                             double lyap_tol) {
  Eigen::LLT<Matrix> llt(symmetrized(X));
  if (llt.info() != Eigen::Success)
    throw InvalidInput("check_signature_bounds: X is not positive definite");
  const Matrix defect = A * X + X * A.transpose() + Z;
  const double rel = defect.norm() / std::max(Z.norm(), 1e-300);
  if (rel > lyap_tol)
    throw InvalidInput(
        "check_signature_bounds: Lyapunov residual too large: " +
        std::to_string(rel));

  SignatureBoundsReport rep;
  rep.sig = signature(Z, zero_tol);
  rep.mu_a = geometric_multiplicity_bound(A);
  rep.m = m;
  rep.lyapunov_residual = rel;
  rep.nu_chain = 0 <= rep.sig.nu && rep.sig.nu <= m;
  rep.pi_chain = rep.mu_a <= rep.sig.pi && rep.sig.pi <= m;
  return rep;
}

}  // namespace ccama
