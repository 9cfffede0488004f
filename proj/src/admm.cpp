#include "ccama/admm.hpp"

#include <Eigen/Cholesky>
#include <cmath>
#include <sstream>

#include "ccama/proxops.hpp"

namespace ccama {

namespace {

double logdet_pd(const Matrix& M) {
  Eigen::LLT<Matrix> llt(symmetrized(M));
  if (llt.info() != Eigen::Success)
    throw NumericalError("logdet of a non positive definite matrix");
  double out = 0.0;
  const Matrix& L = llt.matrixL();
  for (int i = 0; i < M.rows(); ++i) out += std::log(L(i, i));
  return 2.0 * out;
}

bool stop_reached(bool paper_stop, double gap, double primal_residual,
                  double eps_gap, double eps_primal) {
  const bool gap_ok = std::isfinite(gap) && std::abs(gap) <= eps_gap;
  const bool primal_ok = primal_residual <= eps_primal;
  return paper_stop ? (gap_ok || primal_ok) : (gap_ok && primal_ok);
}

}  // namespace

Matrix x_update_admm(const OperatorBundle& bundle, const Matrix& X0,
                     const Matrix& Z, const DualPoint& Y, double rho,
                     const AdmmOptions& opts, const Matrix& G,
                     std::vector<double>* inner_objective) {
  if (rho <= 0.0) throw InvalidInput("x_update_admm: rho must be positive");
  const double mu = opts.mu_safety * rho * bundle.lambda_max_ata();
  if (mu < rho * bundle.lambda_max_ata())
    throw InvalidInput("x_update_admm: mu_safety must be at least 1");

  const Matrix U1 = -(Z + Y.Y1 / rho);
  const Matrix U2 = G - Y.Y2 / rho;
  const auto inner_value = [&](const Matrix& X) {
    return -logdet_pd(X) +
           0.5 * rho * ((bundle.apply_a1(X) - U1).squaredNorm() +
                        (bundle.apply_a2(X) - U2).squaredNorm());
  };

  Matrix X = X0.size() > 0 ? X0 : Matrix::Identity(bundle.n(), bundle.n());
  double rel = std::numeric_limits<double>::infinity();
  for (int i = 0; i < opts.inner_max; ++i) {
    const Matrix R =
        mu * X - rho * (bundle.apply_a1_adj(bundle.apply_a1(X) - U1) +
                        bundle.apply_a2_adj(bundle.apply_a2(X) - U2));
    Matrix X_next = logdet_resolvent(R, mu);
    rel = (X_next - X).norm() / std::max(X.norm(), 1e-300);
    X = std::move(X_next);
    if (inner_objective) inner_objective->push_back(inner_value(X));
    if (rel <= opts.inner_tol) return X;
  }
  std::ostringstream msg;
  msg << "x_update_admm: inner proximal loop exceeded " << opts.inner_max
      << " iterations, last relative change " << rel;
  throw NumericalError(msg.str());
}

SolveResult solve_admm(const ProblemInstance& instance,
                       const AdmmOptions& opts,
                       const OperatorBundle* shared_bundle) {
  if (opts.rho <= 0.0 || opts.mu_safety < 1.0 || opts.inner_tol <= 0.0 ||
      opts.inner_max <= 0 || opts.eps_gap <= 0.0 || opts.eps_primal <= 0.0 ||
      opts.max_iter <= 0)
    throw InvalidInput("solve_admm: invalid options");

  std::optional<OperatorBundle> local;
  if (!shared_bundle)
    local.emplace(instance.model, instance.data.E);
  const OperatorBundle& bundle = shared_bundle ? *shared_bundle : *local;
  const Matrix& G = instance.data.G;
  const double gamma = instance.gamma;
  const int n = bundle.n();
  const int p = bundle.p();
  const double nan = std::numeric_limits<double>::quiet_NaN();

  SolveResult result;
  result.solver = "admm";

  Matrix X = Matrix::Identity(n, n);
  Matrix Z = Matrix::Zero(n, n);
  DualPoint Y = DualPoint::zero(n, p);
  double rho = opts.rho;
  if (opts.record_iterates) result.iterates.push_back(Y);

  for (int k = 0; k < opts.max_iter; ++k) {
    X = x_update_admm(bundle, X, Z, Y, rho, opts, G);

    // Z and the saturated Y1 share the eigenbasis of W1 = Y1 + rho A1(X).
    const Matrix A1X = bundle.apply_a1(X);
    const auto eig_w1 = SpectralDecomposition::compute(Y.Y1 + rho * A1X);
    const Vector shrunk = soft_threshold_spectrum(eig_w1.lambda, gamma);
    const Matrix Z_prev = Z;
    Z = eig_w1.assemble(-shrunk / rho);
    const double nuclear_z = shrunk.cwiseAbs().sum() / rho;

    DualPoint Y_next;
    Y_next.Y1 = eig_w1.assemble(saturate_spectrum(eig_w1.lambda, gamma));
    Y_next.Y2 = symmetrized(Y.Y2 + rho * (bundle.apply_a2(X) - G));

    const double primal_residual =
        std::sqrt((A1X + Z).squaredNorm() +
                  (bundle.apply_a2(X) - G).squaredNorm());
    const double dual_residual =
        rho * bundle.apply_a1_adj(Z - Z_prev).norm();

    const double J_p = -logdet_pd(X) + gamma * nuclear_z;
    double J_d = nan, gap = nan;
    if (const auto ev = bundle.try_dual_evaluation(Y_next)) {
      J_d = bundle.dual_objective_from(*ev, Y_next, G);
      gap = J_p - J_d;
    }

    result.history.push_back(HistoryRow{k + 1, J_p, J_d, gap, primal_residual,
                                        rho, 0, dual_residual});
    if (opts.record_iterates) result.iterates.push_back(Y_next);

    result.X = X;
    result.Z = Z;
    result.iterations = k + 1;
    result.gap = gap;
    result.primal_residual = primal_residual;
    Y = std::move(Y_next);

    if (stop_reached(opts.paper_stop, gap, primal_residual, opts.eps_gap,
                     opts.eps_primal)) {
      result.converged = true;
      break;
    }

    if (opts.step_policy == AdmmStepPolicy::ResidualBalancing) {
      if (primal_residual > 10.0 * dual_residual)
        rho = std::min(rho * 2.0, 1e8);
      else if (dual_residual > 10.0 * primal_residual)
        rho = std::max(rho * 0.5, 1e-8);
    }
  }
  result.Y = Y;
  return result;
}

}  // namespace ccama
