#pragma once

#include "ccama/solver.hpp"

namespace ccama {

enum class AdmmStepPolicy { Constant, ResidualBalancing };

struct AdmmOptions {
  double rho = 1.0;
  double mu_safety = 1.05;  // multiplier on rho * lambda_max(A1'A1 + A2'A2)
  double inner_tol = 1e-8;
  int inner_max = 500;
  double eps_gap = 1e-4;
  double eps_primal = 1e-4;
  int max_iter = 20000;
  AdmmStepPolicy step_policy = AdmmStepPolicy::Constant;
  bool paper_stop = false;
  bool record_iterates = false;
};

// Inner proximal-gradient solve of the augmented-Lagrangian X-minimization:
// repeated log-det resolvent steps with mu = mu_safety * rho * lambda_max,
// warm-started from X0, until the relative change falls below inner_tol.
// When `inner_objective` is non-null it receives the value of the inner
// objective -logdet X + (rho/2) sum_i ||A_i(X) - U_i||_F^2 after every step.
Matrix x_update_admm(const OperatorBundle& bundle, const Matrix& X0,
                     const Matrix& Z, const DualPoint& Y, double rho,
                     const AdmmOptions& opts, const Matrix& G,
                     std::vector<double>* inner_objective = nullptr);

// ADMM baseline: augmented-Lagrangian minimization in both blocks (inner
// proximal-gradient X-update, thresholding Z-update shared with AMA),
// multiplier ascent, optional residual-balancing step adaptation.
SolveResult solve_admm(const ProblemInstance& instance,
                       const AdmmOptions& opts,
                       const OperatorBundle* shared_bundle = nullptr);

}  // namespace ccama
