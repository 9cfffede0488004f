#include "ccama/diagnostics.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>

namespace ccama {

SolverDiagnostics diagnose(const OperatorBundle& bundle,
                           const ProblemInstance& instance,
                           const SolveResult& result) {
  if (result.iterates.size() < 2)
    throw InvalidInput(
        "diagnose: recorded dual iterates missing (solve with "
        "record_iterates)");
  if (result.history.size() + 1 != result.iterates.size())
    throw InvalidInput("diagnose: history and iterates are inconsistent");

  const DualPoint& Y_bar = result.iterates.back();
  const DualPoint& Y0 = result.iterates.front();
  const Matrix S_bar = symmetrized(bundle.apply_adj(Y_bar));
  Eigen::SelfAdjointEigenSolver<Matrix> es(S_bar);
  if (es.info() != Eigen::Success)
    throw NumericalError("diagnose: eigensolver failed");

  SolverDiagnostics d;
  d.alpha = es.eigenvalues().minCoeff();
  d.beta = es.eigenvalues().maxCoeff();
  if (d.alpha <= 0.0)
    throw NumericalError("diagnose: final dual point is infeasible");
  d.sigma_max_a = bundle.sigma_max_a();
  d.sigma_max_adj = bundle.sigma_max_adj();
  d.sigma_max_a1_adj = bundle.sigma_max_a1_adj();
  d.lipschitz = d.sigma_max_adj * d.sigma_max_adj / (d.alpha * d.alpha);
  d.rho_contraction = 2.0 * std::pow(d.alpha, 4) /
                      (d.beta * d.beta * d.sigma_max_a * d.sigma_max_a);

  // Initial-condition constants: beta from the distance of Y^0 to the fixed
  // point, alpha in log form (the determinant factor underflows beyond small
  // n).
  d.lemma_beta =
      d.sigma_max_adj * (Y0 - Y_bar).norm() + es.eigenvalues().cwiseAbs().maxCoeff();
  const auto ev0 = bundle.try_dual_evaluation(Y0);
  if (!ev0) throw NumericalError("diagnose: recorded Y^0 is infeasible");
  const Matrix X_bar = es.eigenvectors() *
                       es.eigenvalues().cwiseInverse().asDiagonal() *
                       es.eigenvectors().transpose();
  const int n = bundle.n();
  d.lemma_log_alpha =
      ev0->logdet + (1.0 - n) * std::log(d.lemma_beta) -
      (instance.data.G.array() * Y0.Y2.array()).sum() -
      instance.gamma * std::sqrt(static_cast<double>(n)) *
          d.sigma_max_a1_adj * X_bar.trace();
  d.lemma_alpha = std::exp(d.lemma_log_alpha);

  // Retrospective contraction check of the recorded run.
  double prev_dist = (result.iterates.front() - Y_bar).norm();
  for (size_t k = 0; k + 1 < result.iterates.size(); ++k) {
    const double next_dist = (result.iterates[k + 1] - Y_bar).norm();
    const double rho_k = result.history[k].rho;
    if (rho_k <= d.rho_contraction) {
      ++d.steps_checked;
      if (next_dist > prev_dist * (1.0 + 1e-12))
        d.violations.push_back(result.history[k].k);
    }
    prev_dist = next_dist;
  }
  d.contraction_verdict = d.violations.empty();
  return d;
}

}  // namespace ccama
