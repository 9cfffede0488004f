#pragma once

#include <functional>
#include <optional>

#include "ccama/problem.hpp"
#include "ccama/types.hpp"

namespace ccama {

// Pair of symmetric dual variables (Y1, Y2) attached to the Lyapunov-like and
// the observation constraints, with the Frobenius pair inner product.
struct DualPoint {
  Matrix Y1;
  Matrix Y2;

  DualPoint() = default;
  DualPoint(Matrix Y1_, Matrix Y2_)
      : Y1(symmetrized(Y1_)), Y2(symmetrized(Y2_)) {}

  static DualPoint zero(int n, int p) {
    return DualPoint(Matrix::Zero(n, n), Matrix::Zero(p, p));
  }

  DualPoint operator+(const DualPoint& o) const {
    return DualPoint(Y1 + o.Y1, Y2 + o.Y2);
  }
  DualPoint operator-(const DualPoint& o) const {
    return DualPoint(Y1 - o.Y1, Y2 - o.Y2);
  }
  DualPoint operator*(double s) const { return DualPoint(s * Y1, s * Y2); }

  double dot(const DualPoint& o) const {
    return (Y1.array() * o.Y1.array()).sum() +
           (Y2.array() * o.Y2.array()).sum();
  }
  double squared_norm() const { return Y1.squaredNorm() + Y2.squaredNorm(); }
  double norm() const { return std::sqrt(squared_norm()); }
};

// Largest eigenvalue of a self-adjoint positive semidefinite operator on
// symmetric n x n matrices, by power iteration from a seeded start.
// Relative tolerance on the Rayleigh quotient; throws on non-convergence.
double power_iteration_lambda_max(
    const std::function<Matrix(const Matrix&)>& op, int n,
    double rel_tol = 1e-8, int max_iter = 10000, uint64_t seed = 0x5EED);

// Shared value of J_d evaluation: log det A-dagger(Y) and its inverse.
struct DualEvaluation {
  double logdet = 0.0;
  Matrix W;  // (A-dagger(Y))^{-1}
};

// The linear operators of the completion problem for a fixed model and mask:
//   A1(X) = A X + X A^T            A1-adj(Y) = A^T Y + Y A
//   A2(X) = (C X C^T) o E          A2-adj(Y) = C^T (E o Y) C
// Spectral quantities are cached at construction (power iteration, fixed
// seed); the bundle is immutable afterwards and safe to share across threads.
class OperatorBundle {
 public:
  OperatorBundle(LtiModel model, Matrix mask);

  const LtiModel& model() const { return model_; }
  const Matrix& mask() const { return mask_; }
  int n() const { return model_.n; }
  int p() const { return model_.p; }

  Matrix apply_a1(const Matrix& X) const;
  Matrix apply_a2(const Matrix& X) const;
  Matrix apply_a1_adj(const Matrix& Y1) const;
  Matrix apply_a2_adj(const Matrix& Y2) const;
  Matrix apply_adj(const DualPoint& Y) const;

  // log det(A-dagger(Y)) and the inverse, or nullopt when not positive
  // definite.
  std::optional<DualEvaluation> try_dual_evaluation(const DualPoint& Y) const;

  // J_d(Y) = log det(A-dagger(Y)) - <G, Y2> + n. Throws when A-dagger(Y) is
  // not positive definite.
  double dual_objective(const DualPoint& Y, const Matrix& G) const;
  double dual_objective_from(const DualEvaluation& eval, const DualPoint& Y,
                             const Matrix& G) const;

  // Ascent gradient of J_d: (A1(W), A2(W) - G) with W = (A-dagger(Y))^{-1}.
  DualPoint dual_gradient(const DualPoint& Y, const Matrix& G) const;
  DualPoint dual_gradient_from(const DualEvaluation& eval,
                               const Matrix& G) const;

  double sigma_max_a() const { return sigma_max_a_; }
  double sigma_max_adj() const { return sigma_max_adj_; }
  double sigma_max_a1_adj() const { return sigma_max_a1_adj_; }
  double lambda_max_ata() const { return lambda_max_ata_; }

 private:
  LtiModel model_;
  Matrix mask_;
  double sigma_max_a_ = 0.0;
  double sigma_max_adj_ = 0.0;
  double sigma_max_a1_adj_ = 0.0;
  double lambda_max_ata_ = 0.0;
};

}  // namespace ccama
