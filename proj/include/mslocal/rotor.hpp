#pragma once

#include <utility>
#include <vector>

#include "mslocal/types.hpp"

namespace mslocal {

/// Tolerance every orthogonal rotation is certified against.
inline constexpr double kOrthTol = 1e-10;

/// Antisymmetric first-order generator A_xy = J_xy / (E_x - E_y) over the
/// perturbative couplings of one scale.
struct Generator {
  Matrix matrix;
  int scale = 0;
  std::vector<std::pair<int, int>> support;  // populated (x, y) pairs, x < y

  double max_abs() const { return matrix.size() == 0 ? 0.0 : matrix.cwiseAbs().maxCoeff(); }
};

/// Dense orthogonal matrix with a certified residual ||R^T R - I||_max.
struct OrthogonalRotation {
  Matrix matrix;
  double orth_residual = 0.0;

  static OrthogonalRotation identity(Eigen::Index n);
};

/// Builds the generator from the perturbative interaction. Every nonzero
/// entry of j_per must sit on a pair with a nonzero energy gap; a vanishing
/// gap means resonance detection failed and is reported as an invariant
/// violation.
Generator build_generator(const Vector& energies, const Matrix& j_per, int scale);

/// exp(-A) by scaling and squaring with a truncated series; the result is
/// certified orthogonal to kOrthTol.
OrthogonalRotation orthogonal_exp(const Generator& gen);
OrthogonalRotation orthogonal_exp_of(const Matrix& antisymmetric);

/// R^T H R, re-symmetrized to kill round-off drift.
Matrix conjugate(const Matrix& h, const OrthogonalRotation& rot);

/// Exact diagonalization of the submatrix indexed by block_sites, embedded as
/// identity outside the block. Eigenvalues come out ascending and their
/// eigenvectors are placed on the block's sites in ascending site order, so
/// block states are labeled lexicographically by increasing energy.
struct BlockRotation {
  std::vector<int> sites;  // ascending flat indices
  Matrix sub;              // |sites| x |sites| orthogonal factor
  std::vector<double> eigenvalues;

  Matrix to_full(Eigen::Index n) const;
};

BlockRotation jacobi_block_diagonalize(const Matrix& h, const std::vector<int>& block_sites);

/// In-place H <- O^T H O for the embedded block rotation; touches only the
/// block's rows and columns.
void apply_block_rotation(Matrix& h, const BlockRotation& rot);

/// In-place R <- R O for the embedded block rotation.
void apply_block_rotation_right(Matrix& r, const BlockRotation& rot);

/// Cumulative product R * step, with the orthogonality certificate renewed.
OrthogonalRotation accumulate(const OrthogonalRotation& r, const Matrix& step);

/// Re-certify an existing product (used after cheap in-place updates).
OrthogonalRotation certify(Matrix r);

}  // namespace mslocal
