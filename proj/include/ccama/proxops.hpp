#pragma once

#include "ccama/types.hpp"

namespace ccama {

// Symmetric eigendecomposition M = U diag(lambda) U^T with eigenvalues
// ordered descending by absolute value, ties broken by descending signed
// value. One decomposition serves soft-thresholding, saturation, and rank
// reporting alike.
struct SpectralDecomposition {
  Matrix U;
  Vector lambda;

  static SpectralDecomposition compute(const Matrix& M);
  Matrix assemble(const Vector& mapped) const;  // U diag(mapped) U^T
};

Vector soft_threshold_spectrum(const Vector& lambda, double tau);
Vector saturate_spectrum(const Vector& lambda, double tau);

// Minimizer of tau*||Z||_* + (1/2)*||Z - M||_F^2 over symmetric Z:
// eigenvalues shrunk toward zero by tau, signs preserved.
Matrix soft_threshold(const Matrix& M, double tau);

// Spectral clipping of the eigenvalues into [-tau, tau]; the proximal map of
// the indicator of the spectral-norm ball.
Matrix saturate(const Matrix& M, double tau);

// Unique positive definite X with mu*X - X^{-1} = R; the resolvent of the
// log-det barrier used by the proximal X-update. Each eigenvalue maps to
// g = lambda/(2 mu) + sqrt((lambda/(2 mu))^2 + 1/mu) > 0.
Matrix logdet_resolvent(const Matrix& R, double mu);

// Sum of singular values of a symmetric matrix.
double nuclear_norm_sym(const Matrix& M);

}  // namespace ccama
