#include <cmath>
#include <sstream>

#include "ccama/proxops.hpp"
#include "ccama/solver.hpp"

namespace ccama {

namespace {

struct AcceptedStep {
  DualPoint Y_next;
  DualEvaluation eval_next;
  SpectralDecomposition eig_w1;  // of Y1 + rho A1(X)
  double rho = 0.0;
  double J_d_next = 0.0;
  int backtracks = 0;
};

// One candidate dual step at a given rho, sharing the eigendecomposition of
// W1 = Y1 + rho A1(X) between the saturation and (later) the Z-update.
struct Candidate {
  DualPoint Y_next;
  SpectralDecomposition eig_w1;
};

Candidate candidate_step(const DualPoint& Y, const DualPoint& grad,
                         double rho, double gamma) {
  Candidate c;
  c.eig_w1 = SpectralDecomposition::compute(Y.Y1 + rho * grad.Y1);
  c.Y_next.Y1 = c.eig_w1.assemble(saturate_spectrum(c.eig_w1.lambda, gamma));
  c.Y_next.Y2 = symmetrized(Y.Y2 + rho * grad.Y2);
  return c;
}

// Sufficient-ascent right-hand side: the local quadratic model of J_d around
// Y with curvature -1/rho.
double ascent_bound(double J_d, const DualPoint& grad, const DualPoint& delta,
                    double rho) {
  return J_d + grad.dot(delta) - delta.squared_norm() / (2.0 * rho);
}

AcceptedStep backtrack_core(const OperatorBundle& bundle, const DualPoint& Y,
                            double J_d, const DualPoint& grad, double rho0,
                            double beta, double gamma, const Matrix& G,
                            int max_backtracks) {
  double rho = rho0;
  bool last_pd_failed = false;
  double last_ascent_defect = 0.0;
  std::vector<double> rho_trace;
  for (int j = 0; j <= max_backtracks; ++j) {
    rho_trace.push_back(rho);
    Candidate c = candidate_step(Y, grad, rho, gamma);
    const auto ev = bundle.try_dual_evaluation(c.Y_next);
    if (!ev) {
      last_pd_failed = true;
      rho *= beta;
      continue;
    }
    const double J_next = bundle.dual_objective_from(*ev, c.Y_next, G);
    const double bound = ascent_bound(J_d, grad, c.Y_next - Y, rho);
    if (J_next >= bound) {
      return AcceptedStep{std::move(c.Y_next), *ev, std::move(c.eig_w1), rho,
                          J_next, j};
    }
    last_pd_failed = false;
    last_ascent_defect = bound - J_next;
    rho *= beta;
  }
  std::ostringstream msg;
  msg << "backtracking failed after " << max_backtracks
      << " shrinkages; rho trace " << rho_trace.front() << " .. "
      << rho_trace.back()
      << (last_pd_failed
              ? "; last trial lost positive definiteness"
              : "; last ascent defect " + std::to_string(last_ascent_defect));
  throw NumericalError(msg.str());
}

double primal_objective(double logdet_x, double gamma, double nuclear_z) {
  return -logdet_x + gamma * nuclear_z;
}

bool stop_reached(bool paper_stop, double gap, double primal_residual,
                  double eps_gap, double eps_primal) {
  const bool gap_ok = std::isfinite(gap) && std::abs(gap) <= eps_gap;
  const bool primal_ok = primal_residual <= eps_primal;
  return paper_stop ? (gap_ok || primal_ok) : (gap_ok && primal_ok);
}

}  // namespace

Matrix x_update(const OperatorBundle& bundle, const DualPoint& Y) {
  const auto ev = bundle.try_dual_evaluation(Y);
  if (!ev) throw NumericalError("x_update: dual point infeasible");
  return ev->W;
}

Matrix z_update(const OperatorBundle& bundle, const Matrix& X,
                const Matrix& Y1, double rho, double gamma) {
  if (rho <= 0.0) throw InvalidInput("z_update: rho must be positive");
  const Matrix V = -(bundle.apply_a1(X) + Y1 / rho);
  return soft_threshold(V, gamma / rho);
}

DualPoint dual_update(const OperatorBundle& bundle, const Matrix& X,
                      const DualPoint& Y, double rho, double gamma,
                      const Matrix& G) {
  if (rho <= 0.0) throw InvalidInput("dual_update: rho must be positive");
  DualPoint out;
  out.Y1 = saturate(Y.Y1 + rho * bundle.apply_a1(X), gamma);
  out.Y2 = symmetrized(Y.Y2 + rho * (bundle.apply_a2(X) - G));
  return out;
}

double bb_step(const DualPoint& Y_prev, const DualPoint& Y_cur,
               const DualPoint& grad_prev, const DualPoint& grad_cur,
               double fallback) {
  const DualPoint dy = Y_cur - Y_prev;
  const double num = dy.squared_norm();
  const double den = dy.dot(grad_prev - grad_cur);
  if (num == 0.0 || den <= 1e-14 * num) return fallback;
  return num / den;
}

BacktrackResult backtrack(const OperatorBundle& bundle, const DualPoint& Y,
                          double rho0, double beta, double gamma,
                          const Matrix& G, int max_backtracks) {
  const auto ev = bundle.try_dual_evaluation(Y);
  if (!ev) throw NumericalError("backtrack: starting dual point infeasible");
  const double J_d = bundle.dual_objective_from(*ev, Y, G);
  const DualPoint grad = bundle.dual_gradient_from(*ev, G);
  AcceptedStep step = backtrack_core(bundle, Y, J_d, grad, rho0, beta, gamma,
                                     G, max_backtracks);
  return BacktrackResult{std::move(step.Y_next), step.rho, step.backtracks,
                         step.J_d_next};
}

DualPoint initial_dual_point(const OperatorBundle& bundle, double gamma) {
  const int n = bundle.n();
  const Matrix& A = bundle.model().A;
  const Matrix Y_L =
      lyapunov_solve(A.transpose(), -Matrix::Identity(n, n));
  const double norm_yl = spectral_norm(Y_L);
  const double c = std::sqrt(gamma / norm_yl);
  Matrix Y1 = c * Y_L;
  const double norm_y1 = c * norm_yl;
  if (norm_y1 > gamma) Y1 *= gamma / norm_y1;
  return DualPoint(std::move(Y1), Matrix::Zero(bundle.p(), bundle.p()));
}

SolveResult solve_ama(const ProblemInstance& instance, const AmaOptions& opts,
                      const OperatorBundle* shared_bundle) {
  if (opts.eps_gap <= 0.0 || opts.eps_primal <= 0.0 || opts.rho0 <= 0.0 ||
      opts.max_iter <= 0 || opts.max_backtracks <= 0 ||
      opts.beta_backtrack <= 0.0 || opts.beta_backtrack >= 1.0 ||
      opts.fixed_rho <= 0.0)
    throw InvalidInput("solve_ama: invalid options");

  std::optional<OperatorBundle> local;
  if (!shared_bundle)
    local.emplace(instance.model, instance.data.E);
  const OperatorBundle& bundle = shared_bundle ? *shared_bundle : *local;
  const Matrix& G = instance.data.G;
  const double gamma = instance.gamma;
  const bool fixed = opts.step_mode == StepMode::Fixed;
  const bool bb = opts.step_mode == StepMode::BbBacktracking;

  SolveResult result;
  result.solver = fixed ? "ama-fixed" : (bb ? "ama-bb" : "ama");

  DualPoint Y = initial_dual_point(bundle, gamma);
  auto ev = bundle.try_dual_evaluation(Y);
  if (!ev) throw NumericalError("solve_ama: initial dual point infeasible");
  if (opts.record_iterates) result.iterates.push_back(Y);

  DualPoint Y_prev, grad_prev;
  double rho_accepted = fixed ? opts.fixed_rho : opts.rho0;

  for (int k = 0; k < opts.max_iter; ++k) {
    const Matrix& X = ev->W;  // X^{k+1} = (A-dagger(Y^k))^{-1}
    const double J_d_cur = bundle.dual_objective_from(*ev, Y, G);
    const DualPoint grad = bundle.dual_gradient_from(*ev, G);

    AcceptedStep step;
    if (fixed) {
      const double rho = opts.fixed_rho;
      Candidate c = candidate_step(Y, grad, rho, gamma);
      auto evn = bundle.try_dual_evaluation(c.Y_next);
      if (!evn)
        throw NumericalError(
            "solve_ama: fixed-step dual update left the feasible region");
      step = AcceptedStep{std::move(c.Y_next), *evn, std::move(c.eig_w1), rho,
                          bundle.dual_objective_from(*evn, c.Y_next, G), 0};
    } else {
      // BB quotient once two gradients exist; regular AMA retries from one
      // notch above the previously accepted step.
      double rho0 = (k == 0) ? opts.rho0 : rho_accepted / opts.beta_backtrack;
      if (bb && k > 0)
        rho0 = bb_step(Y_prev, Y, grad_prev, grad, rho_accepted);
      step = backtrack_core(bundle, Y, J_d_cur, grad, rho0,
                            opts.beta_backtrack, gamma, G,
                            opts.max_backtracks);
    }

    // Z^{k+1} from the shared eigenbasis of W1 = Y1 + rho A1(X):
    // S_{gamma/rho}(-W1/rho) = -(1/rho) S_gamma(W1).
    const Vector shrunk = soft_threshold_spectrum(step.eig_w1.lambda, gamma);
    const Matrix Z = step.eig_w1.assemble(-shrunk / step.rho);
    const double nuclear_z = shrunk.cwiseAbs().sum() / step.rho;

    const double primal_residual = std::sqrt(
        (grad.Y1 + Z).squaredNorm() + grad.Y2.squaredNorm());
    const double J_p = primal_objective(-ev->logdet, gamma, nuclear_z);
    const double gap = J_p - step.J_d_next;

    result.history.push_back(HistoryRow{k + 1, J_p, step.J_d_next, gap,
                                        primal_residual, step.rho,
                                        step.backtracks});
    if (opts.record_iterates) result.iterates.push_back(step.Y_next);

    result.X = X;
    result.Z = Z;
    result.iterations = k + 1;
    result.gap = gap;
    result.primal_residual = primal_residual;

    Y_prev = std::move(Y);
    grad_prev = grad;
    Y = std::move(step.Y_next);
    ev = std::move(step.eval_next);
    rho_accepted = step.rho;

    if (stop_reached(opts.paper_stop, gap, primal_residual, opts.eps_gap,
                     opts.eps_primal)) {
      result.converged = true;
      break;
    }
  }
  result.Y = Y;
  return result;
}

}  // namespace ccama
