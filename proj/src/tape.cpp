// SPDX-License-Identifier: Apache-2.0
#include "cscal/tape.hpp"

#include <atomic>
#include <string>

#include "cscal/errors.hpp"

namespace cscal {

namespace {
std::atomic<std::uint64_t> g_next_tape_id{1};
}

const Tensor& Gradients::at(const Tensor& recorded) const {
  if (!recorded.node) throw ContractError("gradient requested for a constant tensor");
  if (recorded.node->tape_id != tape_id_) {
    throw ContractError("gradient requested for a tensor from another tape");
  }
  return at_index(recorded.node->index);
}

const Tensor& Gradients::at_index(std::size_t node_index) const {
  if (node_index >= grads_.size()) throw ContractError("gradient index out of range");
  return grads_[node_index];
}

Tape::Tape() : id_(g_next_tape_id.fetch_add(1)) {}

Tensor Tape::leaf(Tensor value) {
  value.node.reset();
  return record(std::move(value), {}, nullptr);
}

Tensor Tape::constant(Tensor value) {
  value.node.reset();
  return value;
}

Tensor Tape::record(Tensor value, std::vector<std::size_t> parents, BackwardFn backward) {
  for (std::size_t p : parents) {
    if (p >= nodes_.size()) throw ContractError("parent node index out of range");
  }
  value.node = NodeRef{id_, nodes_.size()};
  nodes_.push_back(Node{std::move(parents), value, std::move(backward)});
  return value;
}

std::optional<std::size_t> Tape::index_if_recorded(const Tensor& t) const {
  if (!t.node) return std::nullopt;
  if (t.node->tape_id != id_) {
    throw ContractError("tensor was recorded on a different tape");
  }
  if (t.node->index >= nodes_.size()) throw ContractError("stale node handle");
  return t.node->index;
}

const Tensor& Tape::value_at(std::size_t node_index) const {
  if (node_index >= nodes_.size()) throw ContractError("node index out of range");
  return nodes_[node_index].value;
}

Gradients Tape::backward(const Tensor& root) const {
  const auto root_index = index_if_recorded(root);
  if (!root_index) throw ContractError("backward root must be recorded on this tape");
  if (!nodes_[*root_index].value.is_scalar()) {
    throw ContractError("backward root must be scalar, got shape " +
                        shape_to_string(nodes_[*root_index].value.shape()));
  }

  Gradients out;
  out.tape_id_ = id_;
  out.grads_.reserve(nodes_.size());
  for (const Node& node : nodes_) out.grads_.emplace_back(Tensor(node.value.shape()));
  out.grads_[*root_index][0] = 1.0;

  for (std::size_t i = nodes_.size(); i-- > 0;) {
    const Node& node = nodes_[i];
    if (!node.backward) continue;
    const Accumulator accumulate = [&](std::size_t slot, const Tensor& contribution) {
      const std::size_t parent = node.parents.at(slot);
      Tensor& g = out.grads_[parent];
      if (!same_shape(g, contribution)) {
        throw ContractError("gradient contribution shape " + shape_to_string(contribution.shape()) +
                            " does not match parent shape " + shape_to_string(g.shape()));
      }
      for (std::size_t k = 0; k < g.numel(); ++k) g[k] += contribution[k];
    };
    node.backward(out.grads_[i], accumulate);
  }
  return out;
}

}  // namespace cscal
