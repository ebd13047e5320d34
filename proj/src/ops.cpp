// SPDX-License-Identifier: Apache-2.0
#include "cscal/ops.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "cscal/errors.hpp"
#include "cscal/svd.hpp"

namespace cscal {

namespace {

void require_same_shape(const char* op, const Tensor& a, const Tensor& b) {
  if (!same_shape(a, b)) {
    throw ContractError(std::string(op) + " shape mismatch: " + shape_to_string(a.shape()) +
                        " vs " + shape_to_string(b.shape()));
  }
}

// Records a one- or two-input node, constant-folding when neither input is
// on the tape. `backward(upstream, accumulate, slot_a, slot_b)` receives -1
// for the slot of a constant input.
template <typename Backward>
Tensor record_binary(Tape& tape, Tensor value, const Tensor& a, const Tensor& b, Backward backward) {
  const auto ia = tape.index_if_recorded(a);
  const auto ib = tape.index_if_recorded(b);
  if (!ia && !ib) return value;
  std::vector<std::size_t> parents;
  int slot_a = -1, slot_b = -1;
  if (ia) { slot_a = static_cast<int>(parents.size()); parents.push_back(*ia); }
  if (ib) { slot_b = static_cast<int>(parents.size()); parents.push_back(*ib); }
  return tape.record(std::move(value), std::move(parents),
                     [backward, slot_a, slot_b](const Tensor& up, const Tape::Accumulator& acc) {
                       backward(up, acc, slot_a, slot_b);
                     });
}

template <typename Backward>
Tensor record_unary(Tape& tape, Tensor value, const Tensor& x, Backward backward) {
  const auto ix = tape.index_if_recorded(x);
  if (!ix) return value;
  return tape.record(std::move(value), {*ix},
                     [backward](const Tensor& up, const Tape::Accumulator& acc) {
                       acc(0, backward(up));
                     });
}

}  // namespace

Tensor matmul(Tape& tape, const Tensor& a, const Tensor& b) {
  Tensor value = matmul_value(a, b);  // performs the shape check
  const Tensor av = Tape::constant(a);
  const Tensor bv = Tape::constant(b);
  return record_binary(tape, std::move(value), a, b,
                       [av, bv](const Tensor& up, const Tape::Accumulator& acc, int sa, int sb) {
                         if (sa >= 0) acc(sa, matmul_value(up, transpose_value(bv)));
                         if (sb >= 0) acc(sb, matmul_value(transpose_value(av), up));
                       });
}

Tensor add(Tape& tape, const Tensor& a, const Tensor& b) {
  require_same_shape("add", a, b);
  Tensor value = a;
  value.node.reset();
  for (std::size_t i = 0; i < value.numel(); ++i) value[i] += b[i];
  return record_binary(tape, std::move(value), a, b,
                       [](const Tensor& up, const Tape::Accumulator& acc, int sa, int sb) {
                         if (sa >= 0) acc(sa, up);
                         if (sb >= 0) acc(sb, up);
                       });
}

Tensor sub(Tape& tape, const Tensor& a, const Tensor& b) {
  require_same_shape("sub", a, b);
  Tensor value = a;
  value.node.reset();
  for (std::size_t i = 0; i < value.numel(); ++i) value[i] -= b[i];
  return record_binary(tape, std::move(value), a, b,
                       [](const Tensor& up, const Tape::Accumulator& acc, int sa, int sb) {
                         if (sa >= 0) acc(sa, up);
                         if (sb >= 0) {
                           Tensor neg = up;
                           neg.node.reset();
                           for (std::size_t i = 0; i < neg.numel(); ++i) neg[i] = -neg[i];
                           acc(sb, neg);
                         }
                       });
}

Tensor mul(Tape& tape, const Tensor& a, const Tensor& b) {
  require_same_shape("mul", a, b);
  Tensor value = a;
  value.node.reset();
  for (std::size_t i = 0; i < value.numel(); ++i) value[i] *= b[i];
  const Tensor av = Tape::constant(a);
  const Tensor bv = Tape::constant(b);
  return record_binary(tape, std::move(value), a, b,
                       [av, bv](const Tensor& up, const Tape::Accumulator& acc, int sa, int sb) {
                         if (sa >= 0) {
                           Tensor g(up.shape());
                           for (std::size_t i = 0; i < g.numel(); ++i) g[i] = up[i] * bv[i];
                           acc(sa, g);
                         }
                         if (sb >= 0) {
                           Tensor g(up.shape());
                           for (std::size_t i = 0; i < g.numel(); ++i) g[i] = up[i] * av[i];
                           acc(sb, g);
                         }
                       });
}

Tensor scale(Tape& tape, const Tensor& x, double s) {
  Tensor value = x;
  value.node.reset();
  for (std::size_t i = 0; i < value.numel(); ++i) value[i] *= s;
  return record_unary(tape, std::move(value), x, [s](const Tensor& up) {
    Tensor g = up;
    g.node.reset();
    for (std::size_t i = 0; i < g.numel(); ++i) g[i] *= s;
    return g;
  });
}

Tensor add_rowwise(Tape& tape, const Tensor& m, const Tensor& row) {
  if (row.rank() != 1 || m.rank() != 2 || row.shape()[0] != m.cols()) {
    throw ContractError("add_rowwise expects [r x c] plus [c], got " +
                        shape_to_string(m.shape()) + " and " + shape_to_string(row.shape()));
  }
  Tensor value = m;
  value.node.reset();
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) value.at(i, j) += row[j];
  return record_binary(tape, std::move(value), m, row,
                       [](const Tensor& up, const Tape::Accumulator& acc, int sm, int sr) {
                         if (sm >= 0) acc(sm, up);
                         if (sr >= 0) {
                           Tensor g(Shape{up.cols()});
                           for (std::size_t i = 0; i < up.rows(); ++i)
                             for (std::size_t j = 0; j < up.cols(); ++j) g[j] += up.at(i, j);
                           acc(sr, g);
                         }
                       });
}

Tensor relu(Tape& tape, const Tensor& x) {
  Tensor value = x;
  value.node.reset();
  for (std::size_t i = 0; i < value.numel(); ++i) value[i] = std::max(value[i], 0.0);
  const Tensor xv = Tape::constant(x);
  return record_unary(tape, std::move(value), x, [xv](const Tensor& up) {
    Tensor g(up.shape());
    for (std::size_t i = 0; i < g.numel(); ++i) g[i] = xv[i] > 0.0 ? up[i] : 0.0;
    return g;
  });
}

Tensor log_guarded(Tape& tape, const Tensor& x) {
  Tensor value = x;
  value.node.reset();
  for (std::size_t i = 0; i < value.numel(); ++i) value[i] = std::log(std::max(value[i], kLogEpsilon));
  const Tensor xv = Tape::constant(x);
  return record_unary(tape, std::move(value), x, [xv](const Tensor& up) {
    Tensor g(up.shape());
    for (std::size_t i = 0; i < g.numel(); ++i) g[i] = xv[i] > kLogEpsilon ? up[i] / xv[i] : 0.0;
    return g;
  });
}

Tensor sum(Tape& tape, const Tensor& x) {
  double s = 0.0;
  for (double v : x.data()) s += v;
  const Shape in_shape = x.shape();
  return record_unary(tape, Tensor::scalar(s), x, [in_shape](const Tensor& up) {
    Tensor g(in_shape);
    const double u = up.value();
    for (std::size_t i = 0; i < g.numel(); ++i) g[i] = u;
    return g;
  });
}

Tensor mean(Tape& tape, const Tensor& x) {
  if (x.numel() == 0) throw ContractError("mean of an empty tensor");
  double s = 0.0;
  for (double v : x.data()) s += v;
  const Shape in_shape = x.shape();
  const double inv_n = 1.0 / static_cast<double>(x.numel());
  return record_unary(tape, Tensor::scalar(s * inv_n), x, [in_shape, inv_n](const Tensor& up) {
    Tensor g(in_shape);
    const double u = up.value() * inv_n;
    for (std::size_t i = 0; i < g.numel(); ++i) g[i] = u;
    return g;
  });
}

Tensor mean_rows(Tape& tape, const Tensor& m) {
  const std::size_t r = m.rows(), c = m.cols();
  if (r == 0) throw ContractError("mean_rows of an empty matrix");
  Tensor value(Shape{c});
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) value[j] += m.at(i, j);
  const double inv_r = 1.0 / static_cast<double>(r);
  for (std::size_t j = 0; j < c; ++j) value[j] *= inv_r;
  return record_unary(tape, std::move(value), m, [r, c, inv_r](const Tensor& up) {
    Tensor g = Tensor::zeros(r, c);
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < c; ++j) g.at(i, j) = up[j] * inv_r;
    return g;
  });
}

Tensor transpose(Tape& tape, const Tensor& m) {
  return record_unary(tape, transpose_value(m), m,
                      [](const Tensor& up) { return transpose_value(up); });
}

Tensor concat_rows(Tape& tape, const Tensor& a, const Tensor& b) {
  if (a.cols() != b.cols()) {
    throw ContractError("concat_rows column mismatch: " + shape_to_string(a.shape()) + " vs " +
                        shape_to_string(b.shape()));
  }
  const std::size_t ra = a.rows(), rb = b.rows(), c = a.cols();
  Tensor value = Tensor::zeros(ra + rb, c);
  for (std::size_t i = 0; i < ra; ++i)
    for (std::size_t j = 0; j < c; ++j) value.at(i, j) = a.at(i, j);
  for (std::size_t i = 0; i < rb; ++i)
    for (std::size_t j = 0; j < c; ++j) value.at(ra + i, j) = b.at(i, j);
  return record_binary(tape, std::move(value), a, b,
                       [ra, rb, c](const Tensor& up, const Tape::Accumulator& acc, int sa, int sb) {
                         if (sa >= 0) {
                           Tensor g = Tensor::zeros(ra, c);
                           for (std::size_t i = 0; i < ra; ++i)
                             for (std::size_t j = 0; j < c; ++j) g.at(i, j) = up.at(i, j);
                           acc(sa, g);
                         }
                         if (sb >= 0) {
                           Tensor g = Tensor::zeros(rb, c);
                           for (std::size_t i = 0; i < rb; ++i)
                             for (std::size_t j = 0; j < c; ++j) g.at(i, j) = up.at(ra + i, j);
                           acc(sb, g);
                         }
                       });
}

Tensor gather_rows(Tape& tape, const Tensor& m, std::span<const std::size_t> rows) {
  const std::size_t r = m.rows(), c = m.cols();
  for (std::size_t idx : rows) {
    if (idx >= r) {
      throw ContractError("gather_rows index " + std::to_string(idx) + " out of range for " +
                          shape_to_string(m.shape()));
    }
  }
  Tensor value = Tensor::zeros(rows.size(), c);
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < c; ++j) value.at(i, j) = m.at(rows[i], j);
  std::vector<std::size_t> index_copy(rows.begin(), rows.end());
  return record_unary(tape, std::move(value), m, [r, c, index_copy](const Tensor& up) {
    Tensor g = Tensor::zeros(r, c);
    for (std::size_t i = 0; i < index_copy.size(); ++i)
      for (std::size_t j = 0; j < c; ++j) g.at(index_copy[i], j) += up.at(i, j);
    return g;
  });
}

Tensor softmax_rows(Tape& tape, const Tensor& logits) {
  Tensor value = softmax_rows_value(logits);
  const Tensor y = Tape::constant(value);
  return record_unary(tape, std::move(value), logits, [y](const Tensor& up) {
    const std::size_t r = y.rows(), c = y.cols();
    Tensor g = Tensor::zeros(r, c);
    for (std::size_t i = 0; i < r; ++i) {
      double dot = 0.0;
      for (std::size_t j = 0; j < c; ++j) dot += up.at(i, j) * y.at(i, j);
      for (std::size_t j = 0; j < c; ++j) g.at(i, j) = y.at(i, j) * (up.at(i, j) - dot);
    }
    return g;
  });
}

Tensor nuclear_norm(Tape& tape, const Tensor& m) {
  ThinSvd svd = thin_svd(m);
  double total = 0.0;
  for (double s : svd.sigma) total += s;
  const std::size_t r = m.rows(), c = m.cols();
  return record_unary(tape, Tensor::scalar(total),
                      m, [svd = std::move(svd), r, c](const Tensor& up) {
                        const double u = up.value();
                        const double cutoff = svd.sigma.empty() ? 0.0 : kSigmaCut * svd.sigma[0];
                        Tensor g = Tensor::zeros(r, c);
                        for (std::size_t k = 0; k < svd.sigma.size(); ++k) {
                          if (svd.sigma[k] <= cutoff) continue;
                          for (std::size_t i = 0; i < r; ++i)
                            for (std::size_t j = 0; j < c; ++j)
                              g.at(i, j) += u * svd.u.at(i, k) * svd.v.at(j, k);
                        }
                        return g;
                      });
}

Tensor grl(Tape& tape, const Tensor& x, double lambda) {
  if (lambda < 0.0) throw ConfigError("grl lambda must be non-negative");
  Tensor value = x;
  value.node.reset();
  return record_unary(tape, std::move(value), x, [lambda](const Tensor& up) {
    Tensor g = up;
    g.node.reset();
    for (std::size_t i = 0; i < g.numel(); ++i) g[i] = -lambda * g[i];
    return g;
  });
}

}  // namespace cscal
