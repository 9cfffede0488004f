#include "ccama/simulation.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <Eigen/Eigenvalues>
#include <cmath>
#include <random>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "ccama/linalg.hpp"

namespace ccama {

namespace {

uint64_t splitmix64(uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

std::mt19937_64 trajectory_rng(uint64_t seed, int index) {
  return std::mt19937_64(splitmix64(seed ^ splitmix64(index + 1)));
}

// Symmetric PSD square root factor; eigenvalues in [-tol, 0) are clipped.
Matrix psd_factor(const Matrix& M, double rel_tol = 1e-12) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrized(M));
  if (es.info() != Eigen::Success)
    throw NumericalError("psd_factor: eigensolver failed");
  const double scale = std::max(es.eigenvalues().cwiseAbs().maxCoeff(), 1e-300);
  Vector lam = es.eigenvalues();
  for (int i = 0; i < lam.size(); ++i) {
    if (lam(i) < -rel_tol * scale)
      throw NumericalError("discrete noise covariance is indefinite");
    lam(i) = std::max(lam(i), 0.0);
  }
  return es.eigenvectors() * lam.cwiseSqrt().asDiagonal();
}

// Per-chunk accumulators; fixed chunk layout keeps the reduction order
// independent of scheduling.
struct ChunkStats {
  Vector sq_norm;      // sum over the chunk's trajectories, per recorded time
  Matrix sq_state;     // recorded times x n
  Matrix tail_cov;     // sum of outer products over tail steps
  long tail_count = 0;
};

}  // namespace

std::pair<Matrix, Matrix> exact_discretization(const Matrix& A,
                                               const Matrix& Q, double h) {
  const int n = static_cast<int>(A.rows());
  Matrix block = Matrix::Zero(2 * n, 2 * n);
  block.topLeftCorner(n, n) = -A;
  block.topRightCorner(n, n) = symmetrized(Q);
  block.bottomRightCorner(n, n) = A.transpose();
  const Matrix e = (block * h).exp();
  const Matrix Phi = e.bottomRightCorner(n, n).transpose();
  Matrix Qd = symmetrized(Phi * e.topRightCorner(n, n));
  return {Phi, Qd};
}

EnsembleStats simulate_ensemble(const FilterRealization& realization,
                                const SimConfig& cfg) {
  if (cfg.dt <= 0.0 || cfg.t_final < cfg.dt)
    throw InvalidInput("simulate_ensemble: need 0 < dt <= t_final");
  if (cfg.n_traj < 1)
    throw InvalidInput("simulate_ensemble: need at least one trajectory");
  if (cfg.output_stride < 1)
    throw InvalidInput("simulate_ensemble: output_stride must be positive");
  const Matrix& Acl = realization.Acl;
  const int n = static_cast<int>(Acl.rows());
  if (!is_hurwitz(Acl))
    throw InvalidInput("simulate_ensemble: closed-loop matrix is not Hurwitz");

  const int steps = static_cast<int>(std::llround(cfg.t_final / cfg.dt));
  const int recorded = steps / cfg.output_stride;
  const int tail_begin = steps - steps / 5;  // last 20% of the horizon

  const Matrix BOB =
      realization.B * realization.Omega * realization.B.transpose();
  Matrix Phi, noise_factor;  // one step: x <- Phi x + noise_factor * xi
  if (cfg.scheme == SimScheme::ExactDiscretization) {
    auto [P, Qd] = exact_discretization(Acl, BOB, cfg.dt);
    Phi = std::move(P);
    noise_factor = psd_factor(Qd);
  } else {
    Phi = Matrix::Identity(n, n) + cfg.dt * Acl;
    noise_factor =
        std::sqrt(cfg.dt) * realization.B * psd_factor(realization.Omega);
  }
  const int noise_dim = static_cast<int>(noise_factor.cols());

  const int n_chunks = std::min(cfg.n_traj, 16);
  std::vector<ChunkStats> chunks(n_chunks);
  for (auto& c : chunks) {
    c.sq_norm = Vector::Zero(recorded);
    c.sq_state = Matrix::Zero(recorded, n);
    c.tail_cov = Matrix::Zero(n, n);
  }

#ifdef _OPENMP
  const bool parallel = cfg.threads != 1;
  const int max_threads = cfg.threads > 0 ? cfg.threads : omp_get_max_threads();
#pragma omp parallel for schedule(dynamic, 1) if (parallel) \
    num_threads(max_threads)
#endif
  for (int c = 0; c < n_chunks; ++c) {
    ChunkStats& acc = chunks[c];
    const int lo = static_cast<int>(static_cast<long>(c) * cfg.n_traj / n_chunks);
    const int hi =
        static_cast<int>(static_cast<long>(c + 1) * cfg.n_traj / n_chunks);
    Vector x(n), xi(noise_dim);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (int t = lo; t < hi; ++t) {
      auto rng = trajectory_rng(cfg.seed, t);
      x.setZero();
      for (int s = 0; s < steps; ++s) {
        for (int i = 0; i < noise_dim; ++i) xi(i) = gauss(rng);
        x = Phi * x + noise_factor * xi;
        if ((s + 1) % cfg.output_stride == 0) {
          const int r = (s + 1) / cfg.output_stride - 1;
          if (r < recorded) {
            acc.sq_norm(r) += x.squaredNorm();
            acc.sq_state.row(r) += x.array().square().matrix().transpose();
          }
        }
        if (s >= tail_begin) {
          acc.tail_cov.noalias() += x * x.transpose();
          ++acc.tail_count;
        }
      }
    }
  }

  EnsembleStats stats;
  stats.steps = steps;
  stats.n_traj = cfg.n_traj;
  stats.tail_start = tail_begin * cfg.dt;
  stats.times = Vector::Zero(recorded);
  for (int r = 0; r < recorded; ++r)
    stats.times(r) = (r + 1) * cfg.output_stride * cfg.dt;
  stats.mean_square_norm = Vector::Zero(recorded);
  stats.state_variance = Matrix::Zero(recorded, n);
  Matrix tail = Matrix::Zero(n, n);
  long tail_count = 0;
  for (const auto& c : chunks) {  // fixed reduction order
    stats.mean_square_norm += c.sq_norm;
    stats.state_variance += c.sq_state;
    tail += c.tail_cov;
    tail_count += c.tail_count;
  }
  stats.mean_square_norm /= cfg.n_traj;
  stats.state_variance /= cfg.n_traj;
  if (tail_count > 0) stats.sample_cov_final = symmetrized(tail / tail_count);
  else stats.sample_cov_final = Matrix::Zero(n, n);
  return stats;
}

CovarianceComparison compare_covariance(const EnsembleStats& stats,
                                        const Matrix& X_target,
                                        const Matrix& mask) {
  const Matrix& S = stats.sample_cov_final;
  if (S.rows() != X_target.rows() || S.cols() != X_target.cols() ||
      mask.rows() != X_target.rows() || mask.cols() != X_target.cols())
    throw InvalidInput("compare_covariance: dimension mismatch");
  CovarianceComparison out;
  const Matrix diff = S - X_target;
  out.abs_error = diff.cwiseAbs();
  const double masked_target = X_target.cwiseProduct(mask).norm();
  out.masked_rel_fro =
      diff.cwiseProduct(mask).norm() / std::max(masked_target, 1e-300);
  out.full_rel_fro = diff.norm() / std::max(X_target.norm(), 1e-300);
  out.diag_target = X_target.diagonal();
  out.diag_sample = S.diagonal();
  return out;
}

}  // namespace ccama
