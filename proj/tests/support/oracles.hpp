// SPDX-License-Identifier: Apache-2.0
//
// Independent scalar oracles used to pin expected values. These must stay
// decoupled from the library's tape/SVD code paths: plain double loops and a
// two-sided symmetric eigensolver only.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "cscal/rng.hpp"
#include "cscal/tensor.hpp"

namespace cscal::test {

inline constexpr double kOracleLogEps = 1e-12;

inline double guarded_log(double x) { return std::log(std::max(x, kOracleLogEps)); }

/// Jensen-Shannon divergence of two discrete distributions, natural log.
inline double js_scalar_oracle(const std::vector<double>& p, const std::vector<double>& q) {
  double kl_p = 0.0, kl_q = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double m = 0.5 * (p[i] + q[i]);
    kl_p += p[i] * (guarded_log(p[i]) - guarded_log(m));
    kl_q += q[i] * (guarded_log(q[i]) - guarded_log(m));
  }
  return 0.5 * kl_p + 0.5 * kl_q;
}

/// Mutual-information estimate of a row-stochastic matrix, plain loops.
inline double mi_scalar_oracle(const Tensor& preds) {
  const std::size_t b = preds.rows(), k = preds.cols();
  std::vector<double> pbar(k, 0.0);
  for (std::size_t i = 0; i < b; ++i)
    for (std::size_t j = 0; j < k; ++j) pbar[j] += preds.at(i, j);
  for (double& v : pbar) v /= static_cast<double>(b);
  double marginal = 0.0;
  for (double v : pbar) marginal -= v * guarded_log(v);
  double conditional = 0.0;
  for (std::size_t i = 0; i < b; ++i)
    for (std::size_t j = 0; j < k; ++j) conditional += preds.at(i, j) * guarded_log(preds.at(i, j));
  return marginal + conditional / static_cast<double>(b);
}

inline double ce_scalar_oracle(const Tensor& preds, const std::vector<int>& labels) {
  double total = 0.0;
  for (std::size_t i = 0; i < preds.rows(); ++i) {
    total -= guarded_log(preds.at(i, static_cast<std::size_t>(labels[i])));
  }
  return total / static_cast<double>(preds.rows());
}

/// Singular values via a cyclic two-sided Jacobi eigensolver on the Gram
/// matrix (the smaller of M^T M and M M^T), sorted descending. A different
/// algorithm from the library's one-sided Jacobi, so it can serve as an
/// oracle for it.
inline std::vector<double> singular_values_oracle(const Tensor& m) {
  const Tensor gram = m.rows() >= m.cols() ? matmul_value(transpose_value(m), m)
                                           : matmul_value(m, transpose_value(m));
  const std::size_t n = gram.rows();
  Tensor a = gram;
  for (std::size_t sweep = 0; sweep < 200; ++sweep) {
    double off = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) off += a.at(i, j) * a.at(i, j);
    if (off < 1e-28) break;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        if (a.at(p, q) == 0.0) continue;
        const double theta = (a.at(q, q) - a.at(p, p)) / (2.0 * a.at(p, q));
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(1.0 + theta * theta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = t * c;
        for (std::size_t i = 0; i < n; ++i) {
          const double aip = a.at(i, p), aiq = a.at(i, q);
          a.at(i, p) = c * aip - s * aiq;
          a.at(i, q) = s * aip + c * aiq;
        }
        for (std::size_t i = 0; i < n; ++i) {
          const double api = a.at(p, i), aqi = a.at(q, i);
          a.at(p, i) = c * api - s * aqi;
          a.at(q, i) = s * api + c * aqi;
        }
      }
    }
  }
  std::vector<double> sv(n);
  for (std::size_t i = 0; i < n; ++i) sv[i] = std::sqrt(std::max(a.at(i, i), 0.0));
  std::sort(sv.begin(), sv.end(), std::greater<double>());
  return sv;
}

inline Tensor random_matrix(CounterRng& rng, std::size_t r, std::size_t c) {
  Tensor t = Tensor::zeros(r, c);
  for (std::size_t i = 0; i < t.numel(); ++i) t[i] = rng.next_normal();
  return t;
}

inline Tensor random_predictions(CounterRng& rng, std::size_t r, std::size_t c) {
  return softmax_rows_value(random_matrix(rng, r, c));
}

inline std::vector<double> row_of(const Tensor& m, std::size_t i) {
  std::vector<double> out(m.cols());
  for (std::size_t j = 0; j < m.cols(); ++j) out[j] = m.at(i, j);
  return out;
}

}  // namespace cscal::test
