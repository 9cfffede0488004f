#pragma once

#include <string>
#include <vector>

#include "ccama/linops.hpp"
#include "ccama/problem.hpp"

namespace ccama {

// BbBacktracking seeds each backtracking search with the Barzilai-Borwein
// quotient; Backtracking reuses the previously accepted step ("regular" AMA);
// Fixed applies fixed_rho with no search (the proximal-gradient view).
enum class StepMode { BbBacktracking, Backtracking, Fixed };

struct AmaOptions {
  double eps_gap = 1e-4;      // epsilon_1, on |duality gap|
  double eps_primal = 1e-4;   // epsilon_2, on the stacked constraint residual
  double beta_backtrack = 0.5;
  double rho0 = 1.0;          // trial step before BB information exists
  int max_iter = 10000;
  int max_backtracks = 60;
  StepMode step_mode = StepMode::BbBacktracking;
  double fixed_rho = 1.0;     // used by StepMode::Fixed
  // Literal Algorithm-1 loop condition (stop once EITHER tolerance is met)
  // instead of the default certificate (stop only when BOTH are met).
  bool paper_stop = false;
  bool record_iterates = false;
};

struct HistoryRow {
  int k = 0;
  double J_p = 0.0;
  double J_d = 0.0;  // NaN when the dual point is infeasible for logdet
  double gap = 0.0;
  double primal_residual = 0.0;
  double rho = 0.0;
  int backtracks = 0;
  // ADMM only: rho * ||A1-adj(Z^{k+1} - Z^k)||_F. Not part of the CSV schema.
  double dual_residual = 0.0;
};

struct SolveResult {
  Matrix X;
  Matrix Z;
  DualPoint Y;
  bool converged = false;
  int iterations = 0;
  double gap = 0.0;
  double primal_residual = 0.0;
  std::vector<HistoryRow> history;
  std::vector<DualPoint> iterates;  // Y^0, Y^1, ... when recorded
  std::string solver;
};

// X^{k+1} = (A-dagger(Y))^{-1}; throws when the dual point is infeasible.
Matrix x_update(const OperatorBundle& bundle, const DualPoint& Y);

// Z^{k+1} = S_{gamma/rho}(V) with V = -(A1(X) + Y1/rho).
Matrix z_update(const OperatorBundle& bundle, const Matrix& X,
                const Matrix& Y1, double rho, double gamma);

// Saturated multiplier updates: Y1 <- T_gamma(Y1 + rho A1(X)),
// Y2 <- Y2 + rho (A2(X) - G). Coincides with Y1 + rho (A1(X) + Z) whenever Z
// is the matching z_update output, through the thresholding identity.
DualPoint dual_update(const OperatorBundle& bundle, const Matrix& X,
                      const DualPoint& Y, double rho, double gamma,
                      const Matrix& G);

// Barzilai-Borwein quotient for the dual ascent step. Degenerate or negative
// curvature falls back to the previous accepted step.
double bb_step(const DualPoint& Y_prev, const DualPoint& Y_cur,
               const DualPoint& grad_prev, const DualPoint& grad_cur,
               double fallback);

struct BacktrackResult {
  DualPoint Y_next;
  double rho = 0.0;
  int backtracks = 0;
  double J_d_next = 0.0;
};

// Shrinks rho0 by beta until the candidate dual point keeps A-dagger positive
// definite and achieves sufficient ascent of J_d. Throws after
// max_backtracks shrinkages, reporting the rho trace and both condition
// defects.
BacktrackResult backtrack(const OperatorBundle& bundle, const DualPoint& Y,
                          double rho0, double beta, double gamma,
                          const Matrix& G, int max_backtracks);

// Y2 = 0 and Y1 = c Y_L with A^T Y_L + Y_L A = I, c = sqrt(gamma/||Y_L||_2),
// so that A1-adj(Y1) = (gamma/||Y1||_2) I. Rescaled into the dual ball when
// ||Y1||_2 > gamma.
DualPoint initial_dual_point(const OperatorBundle& bundle, double gamma);

// Customized AMA: closed-form X-update, singular value thresholding Z-update,
// saturated dual updates, BB step-size initialization with backtracking (or a
// fixed step realizing the proximal-gradient-on-the-dual view).
SolveResult solve_ama(const ProblemInstance& instance, const AmaOptions& opts,
                      const OperatorBundle* shared_bundle = nullptr);

}  // namespace ccama
