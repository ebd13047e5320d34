// SPDX-License-Identifier: Apache-2.0
#include "cscal/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "cscal/errors.hpp"

namespace cscal {

std::string shape_to_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

std::size_t shape_numel(const Shape& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return n;
}

Tensor::Tensor() : shape_{}, data_(1, 0.0) {}

Tensor::Tensor(Shape shape) : shape_(std::move(shape)), data_(shape_numel(shape_), 0.0) {}

Tensor::Tensor(Shape shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  if (shape_numel(shape_) != data_.size()) {
    throw ContractError("tensor data length " + std::to_string(data_.size()) +
                        " does not match shape " + shape_to_string(shape_));
  }
}

Tensor Tensor::scalar(double v) {
  Tensor t;
  t.data_[0] = v;
  return t;
}

Tensor Tensor::vector(std::vector<double> entries) {
  Shape s{entries.size()};
  return Tensor(std::move(s), std::move(entries));
}

Tensor Tensor::zeros(std::size_t rows, std::size_t cols) { return Tensor(Shape{rows, cols}); }

Tensor Tensor::matrix(std::size_t rows, std::size_t cols, std::vector<double> data) {
  return Tensor(Shape{rows, cols}, std::move(data));
}

Tensor Tensor::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t r = rows.size();
  const std::size_t c = r ? rows.begin()->size() : 0;
  std::vector<double> data;
  data.reserve(r * c);
  for (const auto& row : rows) {
    if (row.size() != c) throw ContractError("ragged initializer rows");
    data.insert(data.end(), row.begin(), row.end());
  }
  return Tensor(Shape{r, c}, std::move(data));
}

Tensor Tensor::identity(std::size_t n) {
  Tensor t = zeros(n, n);
  for (std::size_t i = 0; i < n; ++i) t.at(i, i) = 1.0;
  return t;
}

std::size_t Tensor::rows() const {
  if (rank() != 2) throw ContractError("rows() requires a rank-2 tensor, got " + shape_to_string(shape_));
  return shape_[0];
}

std::size_t Tensor::cols() const {
  if (rank() != 2) throw ContractError("cols() requires a rank-2 tensor, got " + shape_to_string(shape_));
  return shape_[1];
}

double Tensor::value() const {
  if (!is_scalar()) {
    throw ContractError("value() requires a single-element tensor, got " + shape_to_string(shape_));
  }
  return data_[0];
}

double Tensor::at(std::size_t r, std::size_t c) const {
  return data_[r * cols() + c];
}

double& Tensor::at(std::size_t r, std::size_t c) {
  return data_[r * cols() + c];
}

bool Tensor::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

bool same_shape(const Tensor& a, const Tensor& b) { return a.shape() == b.shape(); }

bool same_values(const Tensor& a, const Tensor& b) {
  if (!same_shape(a, b)) return false;
  const auto da = a.data();
  const auto db = b.data();
  return std::equal(da.begin(), da.end(), db.begin());
}

Tensor matmul_value(const Tensor& a, const Tensor& b) {
  const std::size_t m = a.rows(), n = a.cols(), p = b.cols();
  if (n != b.rows()) {
    throw ContractError("matmul shape mismatch: " + shape_to_string(a.shape()) + " x " +
                        shape_to_string(b.shape()));
  }
  Tensor out = Tensor::zeros(m, p);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t k = 0; k < n; ++k) {
      const double aik = a.at(i, k);
      for (std::size_t j = 0; j < p; ++j) out.at(i, j) += aik * b.at(k, j);
    }
  }
  return out;
}

Tensor transpose_value(const Tensor& m) {
  const std::size_t r = m.rows(), c = m.cols();
  Tensor out = Tensor::zeros(c, r);
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out.at(j, i) = m.at(i, j);
  return out;
}

Tensor softmax_rows_value(const Tensor& logits) {
  const std::size_t r = logits.rows(), c = logits.cols();
  if (c == 0) throw ContractError("softmax over zero columns");
  Tensor out = Tensor::zeros(r, c);
  for (std::size_t i = 0; i < r; ++i) {
    double mx = logits.at(i, 0);
    for (std::size_t j = 1; j < c; ++j) mx = std::max(mx, logits.at(i, j));
    double denom = 0.0;
    for (std::size_t j = 0; j < c; ++j) {
      const double e = std::exp(logits.at(i, j) - mx);
      out.at(i, j) = e;
      denom += e;
    }
    for (std::size_t j = 0; j < c; ++j) out.at(i, j) /= denom;
  }
  return out;
}

double frobenius_norm(const Tensor& m) {
  double s = 0.0;
  for (double v : m.data()) s += v * v;
  return std::sqrt(s);
}

}  // namespace cscal
