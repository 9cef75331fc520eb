#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>

namespace mslocal {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Raised when a certified numerical contract fails: orthogonality drift,
/// exhausted sweep budgets, vanishing energy denominators.
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Largest |entry| off the diagonal; zero for empty and 1x1 matrices.
template <typename Derived>
double max_abs_offdiag(const Eigen::MatrixBase<Derived>& m) {
  double best = 0.0;
  for (Eigen::Index j = 0; j < m.cols(); ++j)
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      if (i != j) best = std::max(best, std::abs(static_cast<double>(m(i, j))));
  return best;
}

/// max-norm of (R^T R - I).
template <typename Derived>
double orthogonality_residual(const Eigen::MatrixBase<Derived>& r) {
  Matrix g = r.transpose() * r;
  g.diagonal().array() -= 1.0;
  return g.size() == 0 ? 0.0 : g.cwiseAbs().maxCoeff();
}

/// (X + X^T)/2, killing round-off asymmetry after conjugations.
template <typename Derived>
Matrix symmetrized(const Eigen::MatrixBase<Derived>& x) {
  return 0.5 * (x + x.transpose());
}

}  // namespace mslocal
