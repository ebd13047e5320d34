// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "cscal/tensor.hpp"

namespace cscal {

class Tape;

/// Per-node gradients produced by one backward pass. Indexed by the
/// tensors handed out by the tape that ran the pass.
class Gradients {
 public:
  const Tensor& at(const Tensor& recorded) const;
  const Tensor& at_index(std::size_t node_index) const;

 private:
  friend class Tape;
  std::uint64_t tape_id_ = 0;
  std::vector<Tensor> grads_;
};

/// Define-by-run tape. Operations append nodes carrying the cached forward
/// value, the operand node indices, and a local backward rule; the backward
/// pass walks nodes in strict reverse append order exactly once, summing
/// contributions when a value has several consumers. A fresh tape is built
/// per training step.
class Tape {
 public:
  /// accumulate(slot, contribution): adds `contribution` to the gradient of
  /// the parent registered at `slot` (the order the op listed its recorded
  /// operands in).
  using Accumulator = std::function<void(std::size_t slot, const Tensor& contribution)>;
  using BackwardFn = std::function<void(const Tensor& upstream, const Accumulator& accumulate)>;

  Tape();
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Records `value` as an input that receives gradients.
  Tensor leaf(Tensor value);

  /// Strips any tape linkage, detaching the value from gradient flow.
  static Tensor constant(Tensor value);

  /// Low-level node recording used by the ops layer.
  Tensor record(Tensor value, std::vector<std::size_t> parents, BackwardFn backward);

  /// Node index if `t` was recorded here, nullopt for constants.
  /// Throws ContractError for tensors recorded on another tape.
  std::optional<std::size_t> index_if_recorded(const Tensor& t) const;

  std::size_t size() const { return nodes_.size(); }
  std::uint64_t id() const { return id_; }
  const Tensor& value_at(std::size_t node_index) const;

  /// Reverse-mode sweep seeded with d(root)/d(root) = 1. `root` must be a
  /// scalar recorded on this tape.
  Gradients backward(const Tensor& root) const;

 private:
  struct Node {
    std::vector<std::size_t> parents;
    Tensor value;
    BackwardFn backward;  // null for leaves
  };

  std::uint64_t id_;
  std::vector<Node> nodes_;
};

}  // namespace cscal
