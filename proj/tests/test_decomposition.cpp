#include <doctest.h>

#include <Eigen/Eigenvalues>
#include <cmath>

#include "ccama/decomposition.hpp"
#include "ccama/linalg.hpp"
#include "oracles.hpp"

using namespace ccama;

namespace {

// Symmetric matrix with a prescribed signature through a random congruence.
Matrix with_signature(int n, int pi, int nu, std::mt19937_64& rng) {
  Vector d = Vector::Zero(n);
  for (int i = 0; i < pi; ++i) d(i) = 0.5 + (rng() % 100) / 25.0;
  for (int i = 0; i < nu; ++i) d(pi + i) = -(0.5 + (rng() % 100) / 25.0);
  Matrix P = oracles::random_matrix(n, n, rng);
  while (std::abs(P.determinant()) < 1e-3)
    P = oracles::random_matrix(n, n, rng);
  return symmetrized(P * d.asDiagonal() * P.transpose());
}

int rank_of(const Matrix& M) { return numerical_rank(M); }

}  // namespace

TEST_SUITE("decomposition") {

TEST_CASE("signature closed forms") {
  Matrix Z = Matrix::Zero(2, 2);
  Z.diagonal() << 2.0, -2.0;
  const auto s = signature(Z);
  CHECK(s.pi == 1);
  CHECK(s.nu == 1);
  CHECK(s.delta == 0);

  const auto z = signature(Matrix::Zero(4, 4));
  CHECK(z.pi == 0);
  CHECK(z.nu == 0);
  CHECK(z.delta == 4);
}

TEST_CASE("signature flags eigenvalues near the cut") {
  Matrix Z = Matrix::Zero(3, 3);
  Z.diagonal() << 1.0, 3e-6, 1e-9;
  const auto s = signature(Z, 1e-6);
  CHECK(s.pi == 2);
  CHECK(s.delta == 1);
  CHECK(s.near_cut.size() == 1);  // the 3e-6 entry sits within a decade
}

TEST_CASE("congruence to canonical form") {
  SUBCASE("scaled identity") {
    const Matrix Z = 2.0 * Matrix::Identity(3, 3);
    auto [T, sig] = congruence_to_canonical(Z);
    CHECK(sig.pi == 3);
    CHECK((T * Z * T.transpose() - 2.0 * Matrix::Identity(3, 3)).norm() <=
          1e-12);
  }
  SUBCASE("diagonal scaling case") {
    Matrix Z = Matrix::Zero(2, 2);
    Z.diagonal() << 8.0, -2.0;
    auto [T, sig] = congruence_to_canonical(Z);
    Matrix canonical = Matrix::Zero(2, 2);
    canonical.diagonal() << 2.0, -2.0;
    CHECK((T * Z * T.transpose() - canonical).norm() <= 1e-12);
    CHECK(std::abs(std::abs(T(0, 0)) - 0.5) <= 1e-12);
    CHECK(std::abs(std::abs(T(1, 1)) - 1.0) <= 1e-12);
    CHECK(std::abs(T(0, 1)) <= 1e-12);
    CHECK(std::abs(T(1, 0)) <= 1e-12);
  }
  SUBCASE("random matrices satisfy the canonical residual") {
    std::mt19937_64 rng(1);
    for (int t = 0; t < 20; ++t) {
      const int n = 3 + static_cast<int>(rng() % 6);
      const int pi = static_cast<int>(rng() % (n + 1));
      const int nu = static_cast<int>(rng() % (n - pi + 1));
      const Matrix Z = with_signature(n, pi, nu, rng);
      auto [T, sig] = congruence_to_canonical(Z);
      CHECK(sig.pi == pi);
      CHECK(sig.nu == nu);
      Matrix canonical = Matrix::Zero(n, n);
      canonical.topLeftCorner(pi, pi) = 2.0 * Matrix::Identity(pi, pi);
      canonical.block(pi, pi, nu, nu) = -2.0 * Matrix::Identity(nu, nu);
      CHECK((T * Z * T.transpose() - canonical).norm() <=
            1e-8 * std::max(1.0, Z.norm()));
    }
  }
}

TEST_CASE("congruence preserves the signature") {
  std::mt19937_64 rng(2);
  const Matrix Z = with_signature(6, 3, 2, rng);
  auto [T, sig] = congruence_to_canonical(Z);
  const auto after = signature(symmetrized(T * Z * T.transpose()));
  CHECK(after.pi == sig.pi);
  CHECK(after.nu == sig.nu);
  CHECK(after.delta == sig.delta);
}

TEST_CASE("factor_channels closed forms") {
  SUBCASE("one positive, one negative eigenvalue needs one channel") {
    Matrix Z = Matrix::Zero(2, 2);
    Z.diagonal() << 2.0, -2.0;
    const auto dec = factor_channels(Z);
    CHECK(dec.m == 1);
    CHECK((dec.B * dec.H.transpose() + dec.H * dec.B.transpose() - Z).norm() <=
          1e-10);
    CHECK(rank_of(dec.B) == 1);
    CHECK(rank_of(dec.H) == 1);
  }
  SUBCASE("positive definite Z needs n channels") {
    const int n = 4;
    const Matrix Z = 2.0 * Matrix::Identity(n, n);
    const auto dec = factor_channels(Z);
    CHECK(dec.m == n);
    CHECK((dec.B * dec.H.transpose() + dec.H * dec.B.transpose() - Z).norm() <=
          1e-10);
  }
  SUBCASE("zero matrix cannot be factored") {
    CHECK_THROWS_AS(factor_channels(Matrix::Zero(3, 3)), InvalidInput);
  }
}

TEST_CASE("factor_channels: prescribed signature (3, 2, 1)") {
  std::mt19937_64 rng(3);
  const Matrix Z = with_signature(6, 3, 2, rng);
  const auto dec = factor_channels(Z);
  CHECK(dec.sig.pi == 3);
  CHECK(dec.sig.nu == 2);
  CHECK(dec.sig.delta == 1);
  CHECK(dec.m == 3);
  CHECK(dec.reconstruction_residual <= 1e-8 * Z.norm());
  CHECK(dec.canonical_residual <= 1e-8 * Z.norm());
  CHECK(rank_of(dec.B) == 3);
  CHECK(rank_of(dec.H) == 3);
}

TEST_CASE("factorization exactness on random symmetric matrices") {
  std::mt19937_64 rng(4);
  for (int t = 0; t < 100; ++t) {
    const int n = 2 + static_cast<int>(rng() % 11);
    const int pi = static_cast<int>(rng() % (n + 1));
    const int nu = static_cast<int>(rng() % (n - pi + 1));
    if (pi + nu == 0) continue;
    const Matrix Z = with_signature(n, pi, nu, rng);
    const auto dec = factor_channels(Z);
    CHECK(dec.m == std::max(pi, nu));
    CHECK(dec.reconstruction_residual <= 1e-8 * std::max(1.0, Z.norm()));
    CHECK(rank_of(dec.B) == dec.m);
    CHECK(rank_of(dec.H) == dec.m);
    // rank(B H^T) attains max(pi, nu) exactly, and bounds both counts.
    const int rank_s = rank_of(dec.B * dec.H.transpose());
    CHECK(rank_s == dec.m);
    CHECK(dec.sig.pi <= rank_s);
    CHECK(dec.sig.nu <= rank_s);
  }
}

TEST_CASE("geometric multiplicity bound") {
  std::mt19937_64 rng(5);
  CHECK(geometric_multiplicity_bound(-Matrix::Identity(5, 5)) == 5);

  // Distinct eigenvalues: multiplicity one.
  Matrix D = Matrix::Zero(4, 4);
  D.diagonal() << -1.0, -2.0, -3.0, -4.0;
  const Matrix P = oracles::random_matrix(4, 4, rng);
  const Matrix A = P * D * P.inverse();
  CHECK(geometric_multiplicity_bound(A) == 1);

  // Block with a repeated eigenvalue of geometric multiplicity 2.
  Matrix B = -Matrix::Identity(5, 5);
  B(3, 3) = -7.0;
  B(4, 4) = -9.0;
  B(0, 1) = 1.0;  // Jordan-couples states 0 and 1
  CHECK(geometric_multiplicity_bound(B) == 2);

  // MSD chain: all eigenvalues distinct, verified against the dense
  // null-space oracle.
  const auto truth = gen_msd(6);
  const Matrix& Amsd = truth.instance.model.A;
  CHECK(geometric_multiplicity_bound(Amsd) == 1);
  Eigen::EigenSolver<Matrix> es(Amsd, false);
  int oracle_mu = 0;
  for (int k = 0; k < es.eigenvalues().size(); ++k) {
    Eigen::MatrixXcd shifted = Amsd.cast<std::complex<double>>();
    shifted.diagonal().array() -= es.eigenvalues()(k);
    Eigen::FullPivLU<Eigen::MatrixXcd> lu(shifted);
    lu.setThreshold(1e-7);
    oracle_mu = std::max<int>(oracle_mu,
                              static_cast<int>(lu.dimensionOfKernel()));
  }
  CHECK(geometric_multiplicity_bound(Amsd) == oracle_mu);
}

TEST_CASE("admissible signature chains for Lyapunov-generated Z") {
  std::mt19937_64 rng(6);
  SUBCASE("white-noise forcing keeps Z positive semidefinite") {
    const int n = 5, m = 2;
    const Matrix A = oracles::random_hurwitz(n, rng);
    const Matrix B = oracles::random_matrix(n, m, rng);
    const Matrix X = lyapunov_solve(A, B * B.transpose());
    const Matrix Z = -(A * X + X * A.transpose());
    const auto rep = check_signature_bounds(A, X, Z, m);
    CHECK(rep.sig.nu == 0);
    CHECK(rep.nu_chain);
    CHECK(rep.pi_chain);
  }
  SUBCASE("positive count always dominates the multiplicity bound") {
    for (int t = 0; t < 100; ++t) {
      const int n = 2 + static_cast<int>(rng() % 7);
      const Matrix A = oracles::random_hurwitz(n, rng);
      const Matrix X = oracles::random_spd(n, rng);
      const Matrix Z = -symmetrized(A * X + X * A.transpose());
      const auto sig = signature(Z);
      CHECK(sig.pi >= geometric_multiplicity_bound(A));
    }
  }
  SUBCASE("stale Lyapunov pair is rejected") {
    const int n = 4;
    const Matrix A = oracles::random_hurwitz(n, rng);
    const Matrix X = oracles::random_spd(n, rng);
    const Matrix Z = oracles::random_symmetric(n, rng);  // unrelated
    CHECK_THROWS_AS(check_signature_bounds(A, X, Z, n), InvalidInput);
  }
}

}  // TEST_SUITE
