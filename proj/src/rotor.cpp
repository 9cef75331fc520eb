#include "mslocal/rotor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace mslocal {
namespace {

constexpr int kBlockSweepBudget = 100;
constexpr double kBlockSweepTol = 1e-13;  // relative to the submatrix max-norm

}  // namespace

OrthogonalRotation OrthogonalRotation::identity(Eigen::Index n) {
  return OrthogonalRotation{Matrix::Identity(n, n), 0.0};
}

Generator build_generator(const Vector& energies, const Matrix& j_per, int scale) {
  const Eigen::Index n = energies.size();
  if (j_per.rows() != n || j_per.cols() != n)
    throw std::invalid_argument("generator: interaction and energies disagree in size");
  Generator gen;
  gen.scale = scale;
  gen.matrix = Matrix::Zero(n, n);
  for (Eigen::Index x = 0; x < n; ++x)
    for (Eigen::Index y = x + 1; y < n; ++y) {
      const double j = j_per(x, y);
      if (j == 0.0) continue;
      const double gap = energies[x] - energies[y];
      if (gap == 0.0)
        throw NumericalError("generator fed a zero-gap pair (" + std::to_string(x) + "," +
                             std::to_string(y) + "); detection must flag it resonant");
      const double a = j / gap;
      gen.matrix(x, y) = a;
      gen.matrix(y, x) = -a;
      gen.support.emplace_back(static_cast<int>(x), static_cast<int>(y));
    }
  return gen;
}

OrthogonalRotation orthogonal_exp_of(const Matrix& antisymmetric) {
  const Eigen::Index n = antisymmetric.rows();
  if (antisymmetric.cols() != n) throw std::invalid_argument("exp needs a square matrix");
  const double norm = n == 0 ? 0.0 : antisymmetric.cwiseAbs().maxCoeff() * static_cast<double>(n);
  int squarings = 0;
  double scale = 1.0;
  while (norm * scale > 0.5) {
    scale *= 0.5;
    ++squarings;
  }
  const Matrix x = (-scale) * antisymmetric;
  // Horner evaluation of the degree-14 Taylor polynomial; at ||x|| <= 1/2 the
  // truncation error is far below the orthogonality certificate.
  Matrix p = Matrix::Identity(n, n) + x / 14.0;
  for (int k = 13; k >= 1; --k) p = Matrix::Identity(n, n) + (x * p) / static_cast<double>(k);
  for (int k = 0; k < squarings; ++k) p = p * p;

  OrthogonalRotation rot{std::move(p), 0.0};
  rot.orth_residual = orthogonality_residual(rot.matrix);
  if (rot.orth_residual >= kOrthTol)
    throw NumericalError("orthogonal_exp residual " + std::to_string(rot.orth_residual));
  return rot;
}

OrthogonalRotation orthogonal_exp(const Generator& gen) { return orthogonal_exp_of(gen.matrix); }

Matrix conjugate(const Matrix& h, const OrthogonalRotation& rot) {
  if (h.rows() != rot.matrix.rows() || h.cols() != rot.matrix.rows())
    throw std::invalid_argument("conjugate: dimension mismatch");
  return symmetrized(rot.matrix.transpose() * h * rot.matrix);
}

BlockRotation jacobi_block_diagonalize(const Matrix& h, const std::vector<int>& block_sites) {
  if (block_sites.empty()) throw std::invalid_argument("block diagonalization needs sites");
  std::vector<int> sites = block_sites;
  std::sort(sites.begin(), sites.end());
  if (std::adjacent_find(sites.begin(), sites.end()) != sites.end())
    throw std::invalid_argument("block sites repeat");
  const Eigen::Index m = static_cast<Eigen::Index>(sites.size());
  for (int s : sites)
    if (s < 0 || s >= h.rows()) throw std::out_of_range("block site outside matrix");

  Matrix a(m, m);
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = 0; j < m; ++j) a(i, j) = h(sites[i], sites[j]);
  a = symmetrized(a);
  Matrix v = Matrix::Identity(m, m);

  // Row-cyclic sweeps, natural index order.
  const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
  int sweep = 0;
  while (max_abs_offdiag(a) > kBlockSweepTol * scale) {
    if (++sweep > kBlockSweepBudget)
      throw NumericalError("block jacobi: sweep budget exhausted at size " + std::to_string(m));
    for (Eigen::Index p = 0; p < m - 1; ++p)
      for (Eigen::Index q = p + 1; q < m; ++q) {
        const double apq = a(p, q);
        if (std::abs(apq) <= kBlockSweepTol * scale * 1e-3) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (Eigen::Index i = 0; i < m; ++i) {
          const double aip = a(i, p), aiq = a(i, q);
          a(i, p) = c * aip - s * aiq;
          a(i, q) = s * aip + c * aiq;
        }
        for (Eigen::Index i = 0; i < m; ++i) {
          const double api = a(p, i), aqi = a(q, i);
          a(p, i) = c * api - s * aqi;
          a(q, i) = s * api + c * aqi;
        }
        for (Eigen::Index i = 0; i < m; ++i) {
          const double vip = v(i, p), viq = v(i, q);
          v(i, p) = c * vip - s * viq;
          v(i, q) = s * vip + c * viq;
        }
      }
  }

  // Ascending energies matched to the block's sites in ascending site order.
  std::vector<Eigen::Index> order(m);
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index i, Eigen::Index j) { return a(i, i) < a(j, j); });

  BlockRotation rot;
  rot.sites = std::move(sites);
  rot.sub.resize(m, m);
  rot.eigenvalues.resize(m);
  for (Eigen::Index k = 0; k < m; ++k) {
    rot.eigenvalues[k] = a(order[k], order[k]);
    rot.sub.col(k) = v.col(order[k]);
  }
  return rot;
}

Matrix BlockRotation::to_full(Eigen::Index n) const {
  Matrix full = Matrix::Identity(n, n);
  const Eigen::Index m = static_cast<Eigen::Index>(sites.size());
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = 0; j < m; ++j) full(sites[i], sites[j]) = sub(i, j);
  return full;
}

void apply_block_rotation(Matrix& h, const BlockRotation& rot) {
  const Eigen::Index n = h.rows();
  const Eigen::Index m = static_cast<Eigen::Index>(rot.sites.size());
  // Columns: H(:, b) <- H(:, b) * O_b
  Matrix cols(n, m);
  for (Eigen::Index j = 0; j < m; ++j) cols.col(j) = h.col(rot.sites[j]);
  cols = cols * rot.sub;
  for (Eigen::Index j = 0; j < m; ++j) h.col(rot.sites[j]) = cols.col(j);
  // Rows: H(b, :) <- O_b^T * H(b, :)
  Matrix rows(m, n);
  for (Eigen::Index i = 0; i < m; ++i) rows.row(i) = h.row(rot.sites[i]);
  rows = rot.sub.transpose() * rows;
  for (Eigen::Index i = 0; i < m; ++i) h.row(rot.sites[i]) = rows.row(i);
  // Exact symmetry on the touched cross terms.
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = 0; j < n; ++j) {
      const double avg = 0.5 * (h(rot.sites[i], j) + h(j, rot.sites[i]));
      h(rot.sites[i], j) = avg;
      h(j, rot.sites[i]) = avg;
    }
}

void apply_block_rotation_right(Matrix& r, const BlockRotation& rot) {
  const Eigen::Index n = r.rows();
  const Eigen::Index m = static_cast<Eigen::Index>(rot.sites.size());
  Matrix cols(n, m);
  for (Eigen::Index j = 0; j < m; ++j) cols.col(j) = r.col(rot.sites[j]);
  cols = cols * rot.sub;
  for (Eigen::Index j = 0; j < m; ++j) r.col(rot.sites[j]) = cols.col(j);
}

OrthogonalRotation accumulate(const OrthogonalRotation& r, const Matrix& step) {
  if (r.matrix.cols() != step.rows()) throw std::invalid_argument("accumulate: dimension mismatch");
  return certify(r.matrix * step);
}

OrthogonalRotation certify(Matrix r) {
  OrthogonalRotation out{std::move(r), 0.0};
  out.orth_residual = orthogonality_residual(out.matrix);
  if (out.orth_residual >= kOrthTol)
    throw NumericalError("cumulative rotation lost orthogonality: residual " +
                         std::to_string(out.orth_residual));
  return out;
}

}  // namespace mslocal
