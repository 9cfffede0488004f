#pragma once

#include <vector>

#include "ccama/solver.hpp"

namespace ccama {

// Post-hoc constants of the convergence analysis, evaluated at a solved dual
// point, plus a retrospective check that every recorded step within the
// contractive step-size range shrank the distance to the final dual point.
struct SolverDiagnostics {
  double alpha = 0.0;  // lambda_min(A-dagger(Y_final))
  double beta = 0.0;   // lambda_max(A-dagger(Y_final))
  double lipschitz = 0.0;           // sigma_max^2(A-dagger) / alpha^2
  double rho_contraction = 0.0;     // 2 alpha^4 / (beta^2 sigma_max^2(A))
  double lemma_beta = 0.0;          // from the initial-condition bound
  double lemma_log_alpha = 0.0;     // log form; the plain value underflows
  double lemma_alpha = 0.0;         // exp(lemma_log_alpha), possibly 0
  double sigma_max_a = 0.0;
  double sigma_max_adj = 0.0;
  double sigma_max_a1_adj = 0.0;
  bool contraction_verdict = false;
  int steps_checked = 0;
  std::vector<int> violations;  // history indices k that grew the distance
};

// Requires recorded dual iterates in the result (record_iterates option).
SolverDiagnostics diagnose(const OperatorBundle& bundle,
                           const ProblemInstance& instance,
                           const SolveResult& result);

}  // namespace ccama
