#pragma once

#include "mslocal/types.hpp"

namespace mslocal {

/// Ground-truth dense decomposition. Eigenvalues ascending; eigenvectors are
/// the matching columns; residual = max over columns of ||H v - lambda v||_inf.
struct EigenDecomposition {
  Vector eigenvalues;
  Matrix eigenvectors;
  double residual = 0.0;
};

/// Classical cyclic Jacobi on a symmetric matrix. Deliberately shares no code
/// with the multi-scale pipeline's block diagonalizer: separate sweep loop and
/// a Frobenius-based convergence test, so it can serve as an independent
/// reference for the pipeline's output.
EigenDecomposition dense_jacobi_eigensolve(const Matrix& h);

/// Sum over states of |psi_a(x) psi_a(y)|.
double exact_correlator(const EigenDecomposition& decomp, int x, int y);

/// Max absolute difference between the sorted copies of two spectra.
double spectrum_compare(const Vector& a, const Vector& b);

/// Smallest adjacent gap of the sorted eigenvalues; needs length >= 2.
double min_gap(const Vector& eigenvalues);

}  // namespace mslocal
