// SPDX-License-Identifier: Apache-2.0
#include "cscal/svd.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "cscal/errors.hpp"

namespace cscal {

namespace {

double col_dot(const Tensor& b, std::size_t ci, std::size_t cj) {
  double s = 0.0;
  for (std::size_t r = 0; r < b.rows(); ++r) s += b.at(r, ci) * b.at(r, cj);
  return s;
}

// Right-multiplies columns (i, j) of `m` by the rotation [[c, s], [-s, c]].
void rotate_cols(Tensor& m, std::size_t i, std::size_t j, double c, double s) {
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const double vi = m.at(r, i);
    const double vj = m.at(r, j);
    m.at(r, i) = c * vi - s * vj;
    m.at(r, j) = s * vi + c * vj;
  }
}

}  // namespace

ThinSvd thin_svd(const Tensor& a, double tol, std::size_t max_sweeps) {
  const std::size_t m = a.rows();
  const std::size_t n = a.cols();
  if (m == 0 || n == 0) throw ContractError("thin_svd requires a non-empty matrix");
  if (!a.all_finite()) throw NumericError("thin_svd requires finite entries");

  if (m < n) {
    ThinSvd t = thin_svd(transpose_value(a), tol, max_sweeps);
    return ThinSvd{std::move(t.v), std::move(t.sigma), std::move(t.u)};
  }

  Tensor b = a;
  Tensor v = Tensor::identity(n);

  // One-sided Jacobi: orthogonalize column pairs until every inner product
  // is negligible relative to the column norms.
  bool converged = (n <= 1);
  for (std::size_t sweep = 0; sweep < max_sweeps && !converged; ++sweep) {
    converged = true;
    for (std::size_t i = 0; i + 1 < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        const double aii = col_dot(b, i, i);
        const double ajj = col_dot(b, j, j);
        const double aij = col_dot(b, i, j);
        if (std::abs(aij) <= tol * std::sqrt(aii * ajj)) continue;
        converged = false;
        const double zeta = (ajj - aii) / (2.0 * aij);
        const double t = (zeta >= 0.0 ? 1.0 : -1.0) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        rotate_cols(b, i, j, c, s);
        rotate_cols(v, i, j, c, s);
      }
    }
  }
  if (!converged) {
    throw NumericError("svd did not converge within " + std::to_string(max_sweeps) + " sweeps");
  }

  std::vector<double> sigma(n);
  Tensor u = Tensor::zeros(m, n);
  for (std::size_t j = 0; j < n; ++j) {
    sigma[j] = std::sqrt(col_dot(b, j, j));
    if (sigma[j] > 0.0) {
      for (std::size_t r = 0; r < m; ++r) u.at(r, j) = b.at(r, j) / sigma[j];
    }
  }

  // Sort singular values descending, permuting u and v columns to match.
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return sigma[x] > sigma[y]; });
  ThinSvd out{Tensor::zeros(m, n), std::vector<double>(n), Tensor::zeros(n, n)};
  for (std::size_t j = 0; j < n; ++j) {
    out.sigma[j] = sigma[order[j]];
    for (std::size_t r = 0; r < m; ++r) out.u.at(r, j) = u.at(r, order[j]);
    for (std::size_t r = 0; r < n; ++r) out.v.at(r, j) = v.at(r, order[j]);
  }
  return out;
}

}  // namespace cscal
