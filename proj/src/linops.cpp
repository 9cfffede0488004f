#include "ccama/linops.hpp"

#include <Eigen/Cholesky>
#include <random>
#include <sstream>

namespace ccama {

double power_iteration_lambda_max(
    const std::function<Matrix(const Matrix&)>& op, int n, double rel_tol,
    int max_iter, uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Matrix v(n, n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) v(i, j) = gauss(rng);
  v = symmetrized(v);
  v /= v.norm();

  double rayleigh = 0.0;
  for (int it = 0; it < max_iter; ++it) {
    Matrix w = symmetrized(op(v));
    const double lambda = (v.array() * w.array()).sum();
    const double wn = w.norm();
    if (wn == 0.0) return 0.0;
    if (it > 0 &&
        std::abs(lambda - rayleigh) <= rel_tol * std::max(std::abs(lambda), 1e-300)) {
      return lambda;
    }
    rayleigh = lambda;
    v = w / wn;
  }
  std::ostringstream msg;
  msg << "power iteration did not converge; last Rayleigh quotients "
      << rayleigh << ", "
      << (v.array() * symmetrized(op(v)).array()).sum();
  throw NumericalError(msg.str());
}

namespace {

// Power iteration over the stacked pair space for sigma_max(A-dagger).
double pair_lambda_max(const std::function<DualPoint(const DualPoint&)>& op,
                       int n, int p, double rel_tol, int max_iter,
                       uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Matrix a(n, n), b(p, p);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) a(i, j) = gauss(rng);
  for (int j = 0; j < p; ++j)
    for (int i = 0; i < p; ++i) b(i, j) = gauss(rng);
  DualPoint v(a, b);
  v = v * (1.0 / v.norm());

  double rayleigh = 0.0;
  for (int it = 0; it < max_iter; ++it) {
    DualPoint w = op(v);
    const double lambda = v.dot(w);
    const double wn = w.norm();
    if (wn == 0.0) return 0.0;
    if (it > 0 &&
        std::abs(lambda - rayleigh) <= rel_tol * std::max(std::abs(lambda), 1e-300)) {
      return lambda;
    }
    rayleigh = lambda;
    v = w * (1.0 / wn);
  }
  std::ostringstream msg;
  msg << "power iteration (pair space) did not converge; last Rayleigh "
      << "quotients " << rayleigh << ", " << v.dot(op(v));
  throw NumericalError(msg.str());
}

}  // namespace

OperatorBundle::OperatorBundle(LtiModel model, Matrix mask)
    : model_(std::move(model)), mask_(std::move(mask)) {
  if (mask_.rows() != model_.p || mask_.cols() != model_.p)
    throw InvalidInput("OperatorBundle: mask must be p x p");
  if (max_asymmetry(mask_) != 0.0)
    throw InvalidInput("OperatorBundle: mask must be symmetric");

  const auto ata = [this](const Matrix& X) -> Matrix {
    return apply_a1_adj(apply_a1(X)) + apply_a2_adj(apply_a2(X));
  };
  lambda_max_ata_ = std::max(0.0, power_iteration_lambda_max(ata, model_.n));
  sigma_max_a_ = std::sqrt(lambda_max_ata_);

  const auto aat = [this](const DualPoint& Y) {
    const Matrix W = apply_adj(Y);
    return DualPoint(apply_a1(W), apply_a2(W));
  };
  sigma_max_adj_ = std::sqrt(std::max(
      0.0, pair_lambda_max(aat, model_.n, model_.p, 1e-8, 10000, 0x5EED)));

  const auto a1a1 = [this](const Matrix& Y) {
    return apply_a1(apply_a1_adj(Y));
  };
  sigma_max_a1_adj_ =
      std::sqrt(std::max(0.0, power_iteration_lambda_max(a1a1, model_.n)));
}

Matrix OperatorBundle::apply_a1(const Matrix& X) const {
  if (X.rows() != model_.n || X.cols() != model_.n)
    throw InvalidInput("apply_a1: dimension mismatch");
  return model_.A * X + X * model_.A.transpose();
}

Matrix OperatorBundle::apply_a2(const Matrix& X) const {
  if (X.rows() != model_.n || X.cols() != model_.n)
    throw InvalidInput("apply_a2: dimension mismatch");
  return (model_.C * X * model_.C.transpose()).cwiseProduct(mask_);
}

Matrix OperatorBundle::apply_a1_adj(const Matrix& Y1) const {
  if (Y1.rows() != model_.n || Y1.cols() != model_.n)
    throw InvalidInput("apply_a1_adj: dimension mismatch");
  return model_.A.transpose() * Y1 + Y1 * model_.A;
}

Matrix OperatorBundle::apply_a2_adj(const Matrix& Y2) const {
  if (Y2.rows() != model_.p || Y2.cols() != model_.p)
    throw InvalidInput("apply_a2_adj: dimension mismatch");
  return model_.C.transpose() * Y2.cwiseProduct(mask_) * model_.C;
}

Matrix OperatorBundle::apply_adj(const DualPoint& Y) const {
  return apply_a1_adj(Y.Y1) + apply_a2_adj(Y.Y2);
}

std::optional<DualEvaluation> OperatorBundle::try_dual_evaluation(
    const DualPoint& Y) const {
  const Matrix S = symmetrized(apply_adj(Y));
  Eigen::LLT<Matrix> llt(S);
  if (llt.info() != Eigen::Success) return std::nullopt;
  const Matrix& L = llt.matrixL();
  double logdet = 0.0;
  for (int i = 0; i < S.rows(); ++i) {
    if (L(i, i) <= 0.0) return std::nullopt;
    logdet += std::log(L(i, i));
  }
  DualEvaluation ev;
  ev.logdet = 2.0 * logdet;
  ev.W = symmetrized(llt.solve(Matrix::Identity(S.rows(), S.cols())));
  return ev;
}

double OperatorBundle::dual_objective_from(const DualEvaluation& eval,
                                           const DualPoint& Y,
                                           const Matrix& G) const {
  return eval.logdet - (G.array() * Y.Y2.array()).sum() + model_.n;
}

double OperatorBundle::dual_objective(const DualPoint& Y,
                                      const Matrix& G) const {
  const auto ev = try_dual_evaluation(Y);
  if (!ev) throw NumericalError("dual point infeasible for logdet");
  return dual_objective_from(*ev, Y, G);
}

DualPoint OperatorBundle::dual_gradient_from(const DualEvaluation& eval,
                                             const Matrix& G) const {
  return DualPoint(apply_a1(eval.W), apply_a2(eval.W) - G);
}

DualPoint OperatorBundle::dual_gradient(const DualPoint& Y,
                                        const Matrix& G) const {
  const auto ev = try_dual_evaluation(Y);
  if (!ev) throw NumericalError("dual point infeasible for logdet");
  return dual_gradient_from(*ev, G);
}

}  // namespace ccama
