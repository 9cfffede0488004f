#pragma once

#include <utility>
#include <vector>

#include "ccama/types.hpp"

namespace ccama {

// Eigenvalue counts In(Z) = (pi, nu, delta) of a symmetric matrix at a
// relative zero tolerance: counted above +tol*||Z||_2, below -tol*||Z||_2,
// and in between.
struct Signature {
  int pi = 0;
  int nu = 0;
  int delta = 0;
  Vector eigenvalues;  // descending
  double zero_tol = 0.0;
  // Eigenvalues whose magnitude lies within a decade of the cut; a non-empty
  // list means the signature is sensitive to the tolerance.
  std::vector<double> near_cut;
};

Signature signature(const Matrix& Z, double zero_tol = 1e-6);

// Invertible T with T Z T^T = 2 diag(I_pi, -I_nu, 0): orthogonal
// diagonalization, eigenvalue scaling s_i = sqrt(2/|lambda_i|), permutation
// into (+, -, 0) block order.
std::pair<Matrix, Signature> congruence_to_canonical(const Matrix& Z,
                                                     double zero_tol = 1e-6);

// Z = B H^T + H B^T with rank(B) = rank(H) = m = max(pi, nu), the minimum
// over all such factorizations.
struct ChannelDecomposition {
  Matrix T;
  Matrix B;
  Matrix H;
  int m = 0;
  Signature sig;
  double canonical_residual = 0.0;       // ||T Z T^T - canonical||_F
  double reconstruction_residual = 0.0;  // ||B H^T + H B^T - Z||_F
};

ChannelDecomposition factor_channels(const Matrix& Z, double zero_tol = 1e-6);

// mu(A): the largest geometric multiplicity over the eigenvalues of A,
// computed as n - rank(A - lambda I) over the complexification; conjugate
// pairs share their multiplicity so the maximum is unaffected.
int geometric_multiplicity_bound(const Matrix& A, double rank_tol = -1.0);

struct SignatureBoundsReport {
  Signature sig;
  int mu_a = 0;
  int m = 0;
  bool nu_chain = false;  // 0 <= nu(Z) <= m
  bool pi_chain = false;  // mu(A) <= pi(Z) <= m
  double lyapunov_residual = 0.0;
};

// Checks the admissible-signature chains for Z = -(A X + X A^T) against a
// channel count m. Errors out when the Lyapunov identity does not hold to
// tolerance.
SignatureBoundsReport check_signature_bounds(const Matrix& A, const Matrix& X,
                                             const Matrix& Z, int m,
                                             double zero_tol = 1e-6,
                                             double lyap_tol = 1e-6);

}  // namespace ccama
