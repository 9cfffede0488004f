#include <doctest.h>

#include <Eigen/Eigenvalues>
#include <cmath>

#include "ccama/linops.hpp"
#include "ccama/solver.hpp"
#include "oracles.hpp"

using namespace ccama;

namespace {

OperatorBundle identity_bundle(int n) {
  LtiModel model(-Matrix::Identity(n, n), Matrix::Identity(n, n));
  return OperatorBundle(std::move(model), Matrix::Ones(n, n));
}

// A feasible dual point of a bundle: scaled initialization plus a small
// symmetric perturbation, kept inside the logdet domain.
DualPoint random_feasible_point(const OperatorBundle& bundle, double gamma,
                                std::mt19937_64& rng) {
  const DualPoint base = initial_dual_point(bundle, gamma);
  for (double scale = 0.2; scale > 1e-6; scale *= 0.5) {
    DualPoint Y(base.Y1 + scale * oracles::random_symmetric(bundle.n(), rng),
                scale * oracles::random_symmetric(bundle.p(), rng));
    if (bundle.try_dual_evaluation(Y)) return Y;
  }
  return base;
}

}  // namespace

TEST_SUITE("linops") {

TEST_CASE("operator closed forms") {
  auto bundle = identity_bundle(3);
  const Matrix I = Matrix::Identity(3, 3);
  CHECK((bundle.apply_a1(I) + 2.0 * I).norm() == 0.0);

  std::mt19937_64 rng(1);
  const Matrix X = oracles::random_symmetric(3, rng);
  CHECK((bundle.apply_a2(X) - X).norm() == 0.0);  // C = I, all-ones mask
  CHECK((bundle.apply_a1_adj(X) + 2.0 * X).norm() == 0.0);

  const DualPoint zero = DualPoint::zero(3, 3);
  CHECK(bundle.apply_adj(zero).norm() == 0.0);
}

TEST_CASE("adjoint identity on random probes") {
  std::mt19937_64 rng(2);
  const int n = 6, p = 4;
  const Matrix A = oracles::random_hurwitz(n, rng);
  const Matrix C = oracles::random_matrix(p, n, rng);
  Matrix E = Matrix::Zero(p, p);
  for (int i = 0; i < p; ++i)
    for (int j = i; j < p; ++j)
      E(i, j) = E(j, i) = (rng() % 2) ? 1.0 : 0.0;
  OperatorBundle bundle(LtiModel(A, C), E);

  for (int probe = 0; probe < 100; ++probe) {
    const Matrix X = oracles::random_symmetric(n, rng);
    const Matrix Y1 = oracles::random_symmetric(n, rng);
    const Matrix Y2 = oracles::random_symmetric(p, rng);
    const double lhs1 = (bundle.apply_a1(X).array() * Y1.array()).sum();
    const double rhs1 = (X.array() * bundle.apply_a1_adj(Y1).array()).sum();
    CHECK(std::abs(lhs1 - rhs1) <=
          1e-12 * std::max(1.0, std::abs(lhs1)) * n * n);
    const double lhs2 = (bundle.apply_a2(X).array() * Y2.array()).sum();
    const double rhs2 = (X.array() * bundle.apply_a2_adj(Y2).array()).sum();
    CHECK(std::abs(lhs2 - rhs2) <=
          1e-12 * std::max(1.0, std::abs(lhs2)) * n * n);
  }
}

TEST_CASE("dual objective closed forms") {
  std::mt19937_64 rng(3);
  const int n = 2;
  const Matrix A = oracles::random_hurwitz(n, rng);
  OperatorBundle bundle(LtiModel(A, Matrix::Identity(n, n)),
                        Matrix::Zero(n, n));  // empty mask: A2 = 0

  // Y1 = Y_L solves A^T Y + Y A = I, so A-dagger(Y) = I.
  const Matrix Y_L = lyapunov_solve(A.transpose(), -Matrix::Identity(n, n));
  const DualPoint unit(Y_L, Matrix::Zero(n, n));
  CHECK(bundle.dual_objective(unit, Matrix::Zero(n, n)) ==
        doctest::Approx(n).epsilon(1e-10));

  const DualPoint two(2.0 * Y_L, Matrix::Zero(n, n));
  CHECK(bundle.dual_objective(two, Matrix::Zero(n, n)) ==
        doctest::Approx(2.0 * std::log(2.0) + 2.0).epsilon(1e-10));

  const DualPoint infeasible(-Y_L, Matrix::Zero(n, n));
  CHECK_THROWS_WITH_AS(bundle.dual_objective(infeasible, Matrix::Zero(n, n)),
                       "dual point infeasible for logdet", NumericalError);
}

TEST_CASE("dual gradient: identity point") {
  // A-dagger(Y) = I, G = 0, C = I, E = I: the Y2 block of the gradient is
  // the masked inverse, i.e. the identity.
  std::mt19937_64 rng(4);
  const int n = 3;
  const Matrix A = oracles::random_hurwitz(n, rng);
  OperatorBundle bundle(LtiModel(A, Matrix::Identity(n, n)),
                        Matrix::Identity(n, n));
  const Matrix Y_L = lyapunov_solve(A.transpose(), -Matrix::Identity(n, n));
  // A2-adj(0) = 0, so A-dagger((Y_L, 0)) = I still holds.
  const DualPoint Y(Y_L, Matrix::Zero(n, n));
  const DualPoint g = bundle.dual_gradient(Y, Matrix::Zero(n, n));
  CHECK((g.Y2 - Matrix::Identity(n, n)).norm() <= 1e-10);
}

TEST_CASE("dual gradient matches central finite differences") {
  std::mt19937_64 rng(5);
  const int n = 5;
  auto instance = oracles::random_full_instance(n, rng);
  OperatorBundle bundle(instance.model, instance.data.E);
  const Matrix& G = instance.data.G;

  int checked = 0;
  for (int trial = 0; trial < 20; ++trial) {
    const DualPoint Y = random_feasible_point(bundle, 1.0, rng);
    const DualPoint grad = bundle.dual_gradient(Y, G);
    DualPoint dir(oracles::random_symmetric(n, rng),
                  oracles::random_symmetric(n, rng));
    dir = dir * (1.0 / dir.norm());
    const double h = 1e-6;
    const DualPoint Yp = Y + dir * h;
    const DualPoint Ym = Y - dir * h;
    if (!bundle.try_dual_evaluation(Yp) || !bundle.try_dual_evaluation(Ym))
      continue;
    const double fd =
        (bundle.dual_objective(Yp, G) - bundle.dual_objective(Ym, G)) /
        (2.0 * h);
    const double analytic = grad.dot(dir);
    CHECK(std::abs(fd - analytic) <= 1e-5 * std::max(1.0, std::abs(analytic)));
    ++checked;
  }
  CHECK(checked >= 15);
}

TEST_CASE("spectral norms: degenerate operators") {
  std::mt19937_64 rng(6);
  SUBCASE("A = -I with an empty mask gives sigma_max(A) = 2") {
    LtiModel model(-Matrix::Identity(4, 4), Matrix::Identity(4, 4));
    OperatorBundle bundle(std::move(model), Matrix::Zero(4, 4));
    CHECK(bundle.sigma_max_a() == doctest::Approx(2.0).epsilon(1e-7));
    CHECK(bundle.sigma_max_adj() == doctest::Approx(2.0).epsilon(1e-7));
    CHECK(bundle.sigma_max_a1_adj() == doctest::Approx(2.0).epsilon(1e-7));
  }
  SUBCASE("empty mask annihilates A2") {
    const Matrix A = oracles::random_hurwitz(4, rng);
    OperatorBundle bundle(LtiModel(A, Matrix::Identity(4, 4)),
                          Matrix::Zero(4, 4));
    const double lam = power_iteration_lambda_max(
        [&](const Matrix& X) {
          return bundle.apply_a2_adj(bundle.apply_a2(X));
        },
        4);
    CHECK(lam == 0.0);
  }
}

TEST_CASE("spectral norms match the dense matricization oracle") {
  std::mt19937_64 rng(7);
  const int n = 6, p = 4;
  const Matrix A = oracles::random_hurwitz(n, rng);
  const Matrix C = oracles::random_matrix(p, n, rng);
  Matrix E = Matrix::Ones(p, p);
  E(0, 1) = E(1, 0) = 0.0;
  OperatorBundle bundle(LtiModel(A, C), E);

  const double oracle = oracles::sigma_max_stacked(bundle);
  CHECK(bundle.sigma_max_a() == doctest::Approx(oracle).epsilon(1e-6));
  CHECK(bundle.sigma_max_adj() == doctest::Approx(oracle).epsilon(1e-6));
  CHECK(bundle.lambda_max_ata() ==
        doctest::Approx(oracle * oracle).epsilon(1e-6));
  CHECK(bundle.sigma_max_a1_adj() ==
        doctest::Approx(oracles::sigma_max_a1_adj_dense(bundle)).epsilon(1e-6));
}

TEST_CASE("gradient is Lipschitz with the domain constant") {
  std::mt19937_64 rng(8);
  const int n = 4;
  auto instance = oracles::random_full_instance(n, rng);
  OperatorBundle bundle(instance.model, instance.data.E);
  const Matrix& G = instance.data.G;

  for (int trial = 0; trial < 25; ++trial) {
    const DualPoint Y = random_feasible_point(bundle, 1.0, rng);
    const DualPoint Yp = random_feasible_point(bundle, 1.0, rng);
    Eigen::SelfAdjointEigenSolver<Matrix> e1(bundle.apply_adj(Y),
                                             Eigen::EigenvaluesOnly);
    Eigen::SelfAdjointEigenSolver<Matrix> e2(bundle.apply_adj(Yp),
                                             Eigen::EigenvaluesOnly);
    const double alpha =
        std::min(e1.eigenvalues().minCoeff(), e2.eigenvalues().minCoeff());
    REQUIRE(alpha > 0.0);
    const double L =
        bundle.sigma_max_adj() * bundle.sigma_max_adj() / (alpha * alpha);
    const double lhs =
        (bundle.dual_gradient(Y, G) - bundle.dual_gradient(Yp, G)).norm();
    CHECK(lhs <= L * (Y - Yp).norm() * (1.0 + 1e-9));
  }
}

}  // TEST_SUITE
