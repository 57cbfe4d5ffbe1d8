#pragma once

#include "gradgeom/matrix.hpp"

namespace gradgeom {

// a = u * diag(sigma) * v^T with sigma sorted descending.
struct SvdResult {
    Matrix u;
    Vec sigma;
    Matrix v;
};

// One-sided Jacobi SVD. Deterministic; intended for the desk-scale matrices
// used here (up to a few hundred rows/cols).
SvdResult jacobi_svd(const Matrix& a);

// Largest singular value via power iteration on the Gram matrix with the
// normalized all-ones start vector. Falls back to a full Jacobi SVD when the
// iteration has not met the tolerance after max_iters.
double spectral_norm(const Matrix& m, double tol = 1e-8, int max_iters = 10000);

// Largest singular value via Lanczos on the Gram matrix with full
// reorthogonalization. Used by the high-trial-count frequency checkers where
// the near-degenerate top of the Gaussian-matrix spectrum makes plain power
// iteration slow.
double top_singular_value_lanczos(const Matrix& m, double tol = 1e-9);

// Exact mean of the chi distribution: sqrt(2) * Gamma((dim+1)/2) / Gamma(dim/2).
double expected_gaussian_norm(int dim);

// Ordinary least squares slope of y against x.
double ls_slope(std::span<const double> x, std::span<const double> y);

}  // namespace gradgeom
