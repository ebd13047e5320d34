// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace cscal {

/// Handle into the tape that recorded a tensor. Absent for constants.
struct NodeRef {
  std::uint64_t tape_id = 0;
  std::size_t index = 0;
};

using Shape = std::vector<std::size_t>;

std::string shape_to_string(const Shape& shape);
std::size_t shape_numel(const Shape& shape);

/// Dense row-major array of 64-bit floats. Value-semantic; rank 0 is a
/// scalar, rank 1 a vector, rank 2 a matrix. The optional `node` field
/// links the tensor to the tape that produced it.
class Tensor {
 public:
  Tensor();                                      // scalar zero
  explicit Tensor(Shape shape);                  // zero-filled
  Tensor(Shape shape, std::vector<double> data);

  static Tensor scalar(double v);
  static Tensor vector(std::vector<double> entries);
  static Tensor zeros(std::size_t rows, std::size_t cols);
  static Tensor matrix(std::size_t rows, std::size_t cols, std::vector<double> data);
  static Tensor from_rows(std::initializer_list<std::initializer_list<double>> rows);
  static Tensor identity(std::size_t n);

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t numel() const { return data_.size(); }
  bool is_scalar() const { return data_.size() == 1; }

  std::size_t rows() const;  // rank-2 only
  std::size_t cols() const;

  double value() const;  // single-element tensors only

  double at(std::size_t r, std::size_t c) const;
  double& at(std::size_t r, std::size_t c);
  double operator[](std::size_t i) const { return data_[i]; }
  double& operator[](std::size_t i) { return data_[i]; }

  std::span<const double> data() const { return data_; }
  std::span<double> data() { return data_; }

  bool all_finite() const;

  std::optional<NodeRef> node;

 private:
  Shape shape_;
  std::vector<double> data_;
};

bool same_shape(const Tensor& a, const Tensor& b);
bool same_values(const Tensor& a, const Tensor& b);  // bit-exact compare

// Plain value kernels, shared by the tape ops and by gradient-free
// diagnostics (evaluation, class correlation).
Tensor matmul_value(const Tensor& a, const Tensor& b);
Tensor transpose_value(const Tensor& m);
Tensor softmax_rows_value(const Tensor& logits);
double frobenius_norm(const Tensor& m);

}  // namespace cscal
