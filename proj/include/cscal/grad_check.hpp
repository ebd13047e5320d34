// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <functional>

#include "cscal/tape.hpp"
#include "cscal/tensor.hpp"

namespace cscal {

/// Scalar-valued tensor function built from tape ops. Called with a recorded
/// tensor for the analytic pass and with constants for the numeric probes.
using ScalarFn = std::function<Tensor(Tape&, const Tensor&)>;

struct GradCheckDetail {
  double max_rel_error = 0.0;
  std::size_t worst_coord = 0;
  double analytic_at_worst = 0.0;
  double numeric_at_worst = 0.0;
};

/// Compares the tape gradient of f at x against central differences
/// (f(x + eps e_i) - f(x - eps e_i)) / (2 eps) per coordinate. The relative
/// error denominator is max(|analytic|, |numeric|, 1e-8). eps must lie in
/// [1e-7, 1e-4]; f must return a scalar.
GradCheckDetail grad_check_detail(const ScalarFn& f, const Tensor& x, double eps);
double grad_check(const ScalarFn& f, const Tensor& x, double eps);

}  // namespace cscal
