// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "cscal/tape.hpp"
#include "cscal/tensor.hpp"

namespace cscal {

/// Floor applied inside log_guarded so probabilities near zero stay in the
/// log's domain.
inline constexpr double kLogEpsilon = 1e-12;

/// Relative cutoff for the nuclear-norm subgradient: singular values below
/// sigma_min = kSigmaCut * sigma_max are dropped from u v^T.
inline constexpr double kSigmaCut = 1e-10;

// Every op returns a tensor recorded on `tape` unless all inputs are
// constants, in which case the result is a constant too.

/// Backward: dA = dC B^T, dB = A^T dC.
Tensor matmul(Tape& tape, const Tensor& a, const Tensor& b);

// Elementwise, same shape.
Tensor add(Tape& tape, const Tensor& a, const Tensor& b);
Tensor sub(Tape& tape, const Tensor& a, const Tensor& b);
Tensor mul(Tape& tape, const Tensor& a, const Tensor& b);

/// y = s * x.
Tensor scale(Tape& tape, const Tensor& x, double s);

/// Adds `row` (rank-1, length c) to every row of `m` (r x c).
/// Backward: dm = dY, drow = column sums of dY.
Tensor add_rowwise(Tape& tape, const Tensor& m, const Tensor& row);

Tensor relu(Tape& tape, const Tensor& x);

/// ln(max(x, kLogEpsilon)); gradient is zero where the floor is active.
Tensor log_guarded(Tape& tape, const Tensor& x);

Tensor sum(Tape& tape, const Tensor& x);   // -> scalar
Tensor mean(Tape& tape, const Tensor& x);  // -> scalar

/// Mean over the row index of an r x c matrix -> rank-1 length c.
Tensor mean_rows(Tape& tape, const Tensor& m);

Tensor transpose(Tape& tape, const Tensor& m);

Tensor concat_rows(Tape& tape, const Tensor& a, const Tensor& b);

/// Copies the listed rows (duplicates allowed); backward scatters rows back
/// additively, so repeated indices accumulate.
Tensor gather_rows(Tape& tape, const Tensor& m, std::span<const std::size_t> rows);

/// Row-wise softmax with max subtraction. Backward is the exact
/// Jacobian-vector product dX = Y .* (dY - rowsum(dY .* Y)).
Tensor softmax_rows(Tape& tape, const Tensor& logits);

/// Sum of singular values via thin SVD -> scalar. Backward is the
/// subgradient u v^T restricted to singular values above the relative
/// cutoff, scaled by the upstream scalar.
Tensor nuclear_norm(Tape& tape, const Tensor& m);

/// Gradient reversal: forward is the identity (bit-exact); backward emits
/// (-lambda) * upstream. lambda must be >= 0.
Tensor grl(Tape& tape, const Tensor& x, double lambda);

}  // namespace cscal
