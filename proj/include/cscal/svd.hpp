// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <vector>

#include "cscal/tensor.hpp"

namespace cscal {

/// Thin SVD of an m x n matrix: a = u * diag(sigma) * v^T with
/// u m x r, v n x r, r = min(m, n), sigma sorted descending.
/// Columns of u belonging to zero singular values are zero vectors.
struct ThinSvd {
  Tensor u;
  std::vector<double> sigma;
  Tensor v;
};

/// One-sided Jacobi SVD. Throws NumericError if the column pivots have not
/// converged below `tol` (relative off-diagonal mass) within `max_sweeps`.
ThinSvd thin_svd(const Tensor& a, double tol = 1e-12, std::size_t max_sweeps = 200);

}  // namespace cscal
