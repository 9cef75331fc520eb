#include "mslocal/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace mslocal {
namespace {

constexpr int kSweepBudget = 100;

double offdiag_frobenius(const Matrix& a) {
  double sum = 0.0;
  for (Eigen::Index j = 0; j < a.cols(); ++j)
    for (Eigen::Index i = 0; i < a.rows(); ++i)
      if (i != j) sum += a(i, j) * a(i, j);
  return std::sqrt(sum);
}

}  // namespace

EigenDecomposition dense_jacobi_eigensolve(const Matrix& h) {
  if (h.rows() != h.cols()) throw std::invalid_argument("eigensolve needs a square matrix");
  if ((h - h.transpose()).cwiseAbs().maxCoeff() > 1e-12 * (1.0 + h.cwiseAbs().maxCoeff()))
    throw std::invalid_argument("eigensolve needs a symmetric matrix");
  const Eigen::Index n = h.rows();
  Matrix a = symmetrized(h);
  Matrix v = Matrix::Identity(n, n);

  const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
  const double target = 1e-14 * scale * static_cast<double>(n);
  int sweep = 0;
  while (offdiag_frobenius(a) > target) {
    if (++sweep > kSweepBudget) throw NumericalError("jacobi eigensolve: sweep budget exhausted");
    for (Eigen::Index p = 0; p < n - 1; ++p)
      for (Eigen::Index q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (std::abs(apq) <= 1e-300) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (Eigen::Index i = 0; i < n; ++i) {
          const double aip = a(i, p), aiq = a(i, q);
          a(i, p) = c * aip - s * aiq;
          a(i, q) = s * aip + c * aiq;
        }
        for (Eigen::Index i = 0; i < n; ++i) {
          const double api = a(p, i), aqi = a(q, i);
          a(p, i) = c * api - s * aqi;
          a(q, i) = s * api + c * aqi;
        }
        for (Eigen::Index i = 0; i < n; ++i) {
          const double vip = v(i, p), viq = v(i, q);
          v(i, p) = c * vip - s * viq;
          v(i, q) = s * vip + c * viq;
        }
      }
  }

  std::vector<Eigen::Index> order(n);
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index i, Eigen::Index j) { return a(i, i) < a(j, j); });

  EigenDecomposition out;
  out.eigenvalues.resize(n);
  out.eigenvectors.resize(n, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    out.eigenvalues[k] = a(order[k], order[k]);
    out.eigenvectors.col(k) = v.col(order[k]);
  }
  const Matrix res = h * out.eigenvectors - out.eigenvectors * out.eigenvalues.asDiagonal();
  out.residual = res.size() == 0 ? 0.0 : res.cwiseAbs().maxCoeff();
  return out;
}

double exact_correlator(const EigenDecomposition& decomp, int x, int y) {
  const Eigen::Index n = decomp.eigenvectors.rows();
  if (x < 0 || y < 0 || x >= n || y >= n) throw std::out_of_range("correlator site out of range");
  double q = 0.0;
  for (Eigen::Index a = 0; a < decomp.eigenvectors.cols(); ++a)
    q += std::abs(decomp.eigenvectors(x, a) * decomp.eigenvectors(y, a));
  return q;
}

double spectrum_compare(const Vector& a, const Vector& b) {
  if (a.size() != b.size()) throw std::invalid_argument("spectra have different lengths");
  std::vector<double> sa(a.data(), a.data() + a.size());
  std::vector<double> sb(b.data(), b.data() + b.size());
  std::sort(sa.begin(), sa.end());
  std::sort(sb.begin(), sb.end());
  double worst = 0.0;
  for (std::size_t i = 0; i < sa.size(); ++i) worst = std::max(worst, std::abs(sa[i] - sb[i]));
  return worst;
}

double min_gap(const Vector& eigenvalues) {
  if (eigenvalues.size() < 2) throw std::invalid_argument("min_gap needs at least two eigenvalues");
  std::vector<double> s(eigenvalues.data(), eigenvalues.data() + eigenvalues.size());
  std::sort(s.begin(), s.end());
  double gap = s[1] - s[0];
  for (std::size_t i = 2; i < s.size(); ++i) gap = std::min(gap, s[i] - s[i - 1]);
  return gap;
}

}  // namespace mslocal
