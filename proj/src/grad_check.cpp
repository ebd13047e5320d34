// SPDX-License-Identifier: Apache-2.0
#include "cscal/grad_check.hpp"

#include <algorithm>
#include <cmath>

#include "cscal/errors.hpp"

namespace cscal {

namespace {

double eval_value(const ScalarFn& f, const Tensor& x) {
  Tape probe;
  Tensor y = f(probe, Tape::constant(x));
  if (!y.is_scalar()) {
    throw ContractError("grad_check requires a scalar-valued function, got shape " +
                        shape_to_string(y.shape()));
  }
  return y.value();
}

}  // namespace

GradCheckDetail grad_check_detail(const ScalarFn& f, const Tensor& x, double eps) {
  if (!(eps >= 1e-7 && eps <= 1e-4)) {
    throw ContractError("grad_check eps must lie in [1e-7, 1e-4]");
  }

  Tape tape;
  const Tensor leaf = tape.leaf(Tape::constant(x));
  Tensor y = f(tape, leaf);
  if (!y.is_scalar()) {
    throw ContractError("grad_check requires a scalar-valued function, got shape " +
                        shape_to_string(y.shape()));
  }
  const Gradients grads = tape.backward(y);
  const Tensor& analytic = grads.at(leaf);

  GradCheckDetail out;
  Tensor probe = Tape::constant(x);
  for (std::size_t i = 0; i < probe.numel(); ++i) {
    const double saved = probe[i];
    probe[i] = saved + eps;
    const double plus = eval_value(f, probe);
    probe[i] = saved - eps;
    const double minus = eval_value(f, probe);
    probe[i] = saved;

    const double numeric = (plus - minus) / (2.0 * eps);
    const double denom = std::max({std::abs(analytic[i]), std::abs(numeric), 1e-8});
    const double rel = std::abs(analytic[i] - numeric) / denom;
    if (rel >= out.max_rel_error) {
      out.max_rel_error = rel;
      out.worst_coord = i;
      out.analytic_at_worst = analytic[i];
      out.numeric_at_worst = numeric;
    }
  }
  return out;
}

double grad_check(const ScalarFn& f, const Tensor& x, double eps) {
  return grad_check_detail(f, x, eps).max_rel_error;
}

}  // namespace cscal
