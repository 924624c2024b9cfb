#pragma once

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <utility>
#include <vector>

#include "bptsan/diffcore/tensor.hpp"
#include "bptsan/errors.hpp"

namespace bptsan::diff {

class Tape;

/// Handle to a value recorded on a Tape (the differentiable counterpart of a
/// Tensor). Valid for the lifetime of the tape, until Tape::clear().
class Var {
 public:
  Var() = default;

  const Tensor& value() const;
  std::size_t id() const { return id_; }
  Tape* tape() const { return tape_; }
  bool valid() const { return tape_ != nullptr; }
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

/// Define-by-run reverse-mode tape. Every operation appends one node holding
/// its forward value and a closure that pushes the node's gradient to its
/// parents. Nodes are appended in execution order, so a reverse sweep over the
/// node list is a valid topological order.
///
/// A tape is confined to one thread.
class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, std::size_t self)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Untracked value: no gradient flows into it.
  Var constant(Tensor value) { return push(std::move(value), false, nullptr); }

  /// Tracked leaf; its gradient is readable through grad() after backward().
  Var input(Tensor value) { return push(std::move(value), true, nullptr); }

  /// Leaf bound to a Parameter. backward() accumulates into p.grad. With
  /// trainable = false the value is used as a constant.
  Var param(Parameter& p, bool trainable = true) {
    if (!trainable) return constant(p.value);
    Parameter* target = &p;
    return push(p.value, true, [target](Tape& t, std::size_t self) {
      const Tensor& g = t.nodes_[self].grad;
      for (std::size_t i = 0; i < g.size(); ++i) target->grad[i] += g[i];
    });
  }

  /// Records an operation result. The node requires a gradient when any parent
  /// does; otherwise the closure is dropped.
  Var record(Tensor value, std::initializer_list<Var> parents, BackwardFn backward) {
    bool needs = false;
    for (const Var& p : parents) {
      check_owned(p);
      needs = needs || nodes_[p.id_].requires_grad;
    }
    return push(std::move(value), needs, needs ? std::move(backward) : BackwardFn{});
  }

  /// Same as record() for a runtime-sized parent list.
  Var record(Tensor value, const std::vector<Var>& parents, BackwardFn backward) {
    bool needs = false;
    for (const Var& p : parents) {
      check_owned(p);
      needs = needs || nodes_[p.id_].requires_grad;
    }
    return push(std::move(value), needs, needs ? std::move(backward) : BackwardFn{});
  }

  const Tensor& value(std::size_t id) const { return nodes_[id].value; }
  bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }
  bool requires_grad(Var v) const { return nodes_[v.id_].requires_grad; }

  /// Gradient buffer of a node, allocated (zeroed) on first use.
  Tensor& grad_buffer(std::size_t id) {
    Node& n = nodes_[id];
    if (n.grad.size() != n.value.size()) n.grad = n.value.zeros_like();
    return n.grad;
  }

  /// Gradient of the last backward() root with respect to v (zeros when v did
  /// not influence the root).
  Tensor grad(Var v) const {
    check_owned(v);
    const Node& n = nodes_[v.id_];
    if (n.grad.size() != n.value.size()) return n.value.zeros_like();
    return n.grad;
  }

  /// Reverse sweep from a scalar root. Node gradients are reset first, so
  /// repeated calls on the same tape give identical results; Parameter grads
  /// accumulate and must be zeroed by the caller.
  void backward(Var root) {
    check_owned(root);
    if (nodes_[root.id_].value.size() != 1)
      throw ContractError("Tape::backward: seed must be a scalar");
    for (Node& n : nodes_) n.grad = Tensor{};
    grad_buffer(root.id_)[0] = 1.0;
    for (std::size_t i = root.id_ + 1; i-- > 0;) {
      Node& n = nodes_[i];
      if (!n.requires_grad || !n.backward || n.grad.size() == 0) continue;
      n.backward(*this, i);
    }
  }

  std::size_t size() const { return nodes_.size(); }

  void clear() { nodes_.clear(); }

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    bool requires_grad = false;
    BackwardFn backward;
  };

  Var push(Tensor value, bool requires_grad, BackwardFn fn) {
    nodes_.push_back(Node{std::move(value), Tensor{}, requires_grad, std::move(fn)});
    return Var(this, nodes_.size() - 1);
  }

  void check_owned(const Var& v) const {
    if (v.tape_ != this || v.id_ >= nodes_.size())
      throw ContractError("Var does not belong to this tape");
  }

  std::vector<Node> nodes_;
};

inline const Tensor& Var::value() const { return tape_->value(id_); }

}  // namespace bptsan::diff
